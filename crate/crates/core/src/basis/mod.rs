//! Classical Bernstein bases and their λ-modified Bézier counterparts.
//!
//! All floating-point evaluation goes through a mode-anchored recurrence: the
//! largest term `b_{n,m}(x)` with `m = ⌊(n+1)x⌋` is seeded with `1`, the
//! neighbours are generated by the ratio `b_{n,i+1}/b_{n,i} = (n-i)/(i+1) · x/(1-x)`
//! walking outward, and the vector is normalised by its sum. Every ratio taken
//! away from the mode is below one, so nothing overflows and the terms that
//! underflow are below `2^-1074` relative to the mode.

pub mod exact;

use crate::error::{Error, Result};

/// Terms below this fraction of the mode term (with a geometric tail bound) are
/// dropped by [`bernstein_combination`].
const TAIL_CUTOFF: f64 = 1e-20;

/// Shape parameter `λ ∈ [-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ShapeParam(f64);

impl ShapeParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&lambda) {
            Ok(Self(lambda))
        } else {
            Err(Error::ShapeOutOfRange(lambda))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Operator degree, at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Degree(usize);

impl Degree {
    pub const MIN: usize = 2;

    pub fn new(n: usize) -> Result<Self> {
        if n >= Self::MIN {
            Ok(Self(n))
        } else {
            Err(Error::InvalidDegree { n, min: Self::MIN })
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// The `n + 1` values `b̃_{n,i}(λ; x)` at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisVector {
    pub values: Vec<f64>,
    pub x: f64,
    pub lambda: f64,
}

impl BasisVector {
    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `Σ coeffs[i] · values[i]`.
    pub fn dot(&self, coeffs: &[f64]) -> f64 {
        debug_assert_eq!(coeffs.len(), self.values.len());
        self.values.iter().zip(coeffs).map(|(b, c)| b * c).sum()
    }
}

pub(crate) fn check_point(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::PointOutOfDomain(x))
    }
}

/// Index of the largest `b_{n,i}(x)` for `0 < x < 1`.
fn mode(n: usize, x: f64) -> usize {
    ((((n + 1) as f64) * x).floor() as usize).min(n)
}

/// Classical Bernstein basis `b_{n,i}(x) = C(n,i) x^i (1-x)^{n-i}`, `i = 0..=n`.
///
/// Stable for large `n`; no binomial coefficient is formed explicitly.
pub fn bernstein_basis(n: usize, x: f64) -> Result<Vec<f64>> {
    check_point(x)?;
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    if x == 1.0 {
        out[n] = 1.0;
        return Ok(out);
    }

    let t = x / (1.0 - x);
    let m = mode(n, x);
    out[m] = 1.0;
    let mut total = 1.0;

    let mut u = 1.0;
    for i in m..n {
        u *= (n - i) as f64 / (i + 1) as f64 * t;
        out[i + 1] = u;
        total += u;
    }
    let mut u = 1.0;
    for i in (1..=m).rev() {
        u *= i as f64 / ((n - i + 1) as f64 * t);
        out[i - 1] = u;
        total += u;
    }

    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// `Σ_i coeffs[i] · b_{d,i}(x)` with `d = coeffs.len() - 1`, for `x ∈ [0, 1]`.
///
/// Visits only the terms around the mode whose contribution is not negligible,
/// which makes it `O(√d)` for interior `x` instead of `O(d)`.
pub(crate) fn bernstein_combination(coeffs: &[f64], x: f64) -> f64 {
    let d = coeffs.len() - 1;
    if x <= 0.0 {
        return coeffs[0];
    }
    if x >= 1.0 {
        return coeffs[d];
    }

    let t = x / (1.0 - x);
    let m = mode(d, x);
    let mut acc = coeffs[m];
    let mut weight = 1.0;

    let mut u = 1.0;
    for i in m..d {
        let r = (d - i) as f64 / (i + 1) as f64 * t;
        u *= r;
        acc += coeffs[i + 1] * u;
        weight += u;
        if r < 1.0 && u * r / (1.0 - r) < TAIL_CUTOFF {
            break;
        }
    }
    let mut u = 1.0;
    for i in (1..=m).rev() {
        let r = i as f64 / ((d - i + 1) as f64 * t);
        u *= r;
        acc += coeffs[i - 1] * u;
        weight += u;
        if r < 1.0 && u * r / (1.0 - r) < TAIL_CUTOFF {
            break;
        }
    }
    acc / weight
}

/// λ-modified Bézier basis of degree `n`:
///
/// ```text
/// b̃_{n,0} = b_{n,0} - λ/(n+1) · b_{n+1,1}
/// b̃_{n,i} = b_{n,i} + λ [ (n-2i+1)/(n²-1) · b_{n+1,i} - (n-2i-1)/(n²-1) · b_{n+1,i+1} ],  1 ≤ i ≤ n-1
/// b̃_{n,n} = b_{n,n} - λ/(n+1) · b_{n+1,n}
/// ```
pub fn lambda_basis(n: Degree, lambda: ShapeParam, x: f64) -> Result<BasisVector> {
    let n = n.get();
    let lam = lambda.value();
    let lower = bernstein_basis(n, x)?;
    let upper = bernstein_basis(n + 1, x)?;

    let nf = n as f64;
    let denom = nf * nf - 1.0;
    let end = lam / (nf + 1.0);

    let mut values = lower;
    values[0] -= end * upper[1];
    values[n] -= end * upper[n];
    for i in 1..n {
        let fi = i as f64;
        let left = (nf - 2.0 * fi + 1.0) / denom;
        let right = (nf - 2.0 * fi - 1.0) / denom;
        values[i] += lam * (left * upper[i] - right * upper[i + 1]);
    }
    Ok(BasisVector { values, x, lambda: lam })
}
