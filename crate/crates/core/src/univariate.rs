//! The univariate λ-Bernstein operator `B_{n,λ}(f; x) = Σ f(i/n) b̃_{n,i}(λ; x)`,
//! its closed-form moments and grid errors.

use crate::basis::{self, bernstein_combination, check_point, Degree, ShapeParam};
use crate::error::{Error, Result};
use crate::function::FunctionHandle;

/// Degree and shape parameter of one operator instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    pub n: Degree,
    pub lambda: ShapeParam,
}

/// Raw moments `B(t^j; x)` for `j = 0..=4` together with the first two central moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub at: f64,
    pub raw: [f64; 5],
    /// `B((t - x); x)`
    pub beta: f64,
    /// `B((t - x)²; x)`
    pub alpha: f64,
}

/// Node values of one function, ready for repeated evaluation of `B_{n,λ}f`.
///
/// The operator is rewritten as `Σ f_i b_{n,i}(x) + λ Σ g_j b_{n+1,j}(x)`, where
/// `g` collects the correction terms of the λ-basis by degree-`n+1` index.
#[derive(Debug, Clone)]
pub struct PreparedOperator {
    nodes: Vec<f64>,
    correction: Vec<f64>,
    lambda: f64,
}

impl PreparedOperator {
    pub fn new(spec: OperatorSpec, f: impl Fn(f64) -> f64) -> Self {
        let n = spec.degree();
        let nf = n as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| f(i as f64 / nf)).collect();

        let denom = nf * nf - 1.0;
        let mut correction = vec![0.0; n + 2];
        for (j, g) in correction.iter_mut().enumerate().take(n + 1).skip(1) {
            let weight = (nf - 2.0 * j as f64 + 1.0) / denom;
            let mut diff = 0.0;
            if j < n {
                diff += nodes[j];
            }
            if j >= 2 {
                diff -= nodes[j - 1];
            }
            *g = weight * diff;
        }
        correction[1] -= nodes[0] / (nf + 1.0);
        correction[n] -= nodes[n] / (nf + 1.0);

        Self { nodes, correction, lambda: spec.lambda() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let base = bernstein_combination(&self.nodes, x);
        if self.lambda == 0.0 {
            base
        } else {
            base + self.lambda * bernstein_combination(&self.correction, x)
        }
    }
}

impl OperatorSpec {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        Ok(Self { n: Degree::new(n)?, lambda: ShapeParam::new(lambda)? })
    }

    pub fn degree(&self) -> usize {
        self.n.get()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.value()
    }

    pub fn prepare(&self, f: &FunctionHandle) -> PreparedOperator {
        PreparedOperator::new(*self, |x| f.eval(x))
    }

    /// `B_{n,λ}(f; x)`. Only the nodes `i/n` are sampled.
    pub fn apply(&self, f: &FunctionHandle, x: f64) -> Result<f64> {
        check_point(x)?;
        Ok(self.prepare(f).eval(x))
    }

    /// Same as [`apply`](Self::apply) but summing against an explicit λ-basis vector.
    pub fn apply_direct(&self, f: &FunctionHandle, x: f64) -> Result<f64> {
        let basis = basis::lambda_basis(self.n, self.lambda, x)?;
        let nf = self.degree() as f64;
        Ok(basis.values.iter().enumerate().map(|(i, b)| f.eval(i as f64 / nf) * b).sum())
    }

    /// Closed-form raw moment `B_{n,λ}(t^j; x)` for `j ≤ 4`.
    pub fn raw_moment(&self, j: usize, x: f64) -> Result<f64> {
        check_point(x)?;
        let n = self.degree() as f64;
        let lam = self.lambda();
        let p = x.powi(self.degree() as i32 + 1);
        let q = (1.0 - x).powi(self.degree() as i32 + 1);
        let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
        let n1 = n - 1.0;
        let v = match j {
            0 => 1.0,
            1 => x + (1.0 - 2.0 * x + p - q) / (n * n1) * lam,
            2 => {
                x2 + x * (1.0 - x) / n
                    + ((2.0 * x - 4.0 * x2 + 2.0 * p) / (n * n1) + (p + q - 1.0) / (n * n * n1)) * lam
            }
            3 => {
                let n2 = n * n;
                let n3 = n2 * n;
                x3 + 3.0 * x2 * (1.0 - x) / n
                    + (2.0 * x3 - 3.0 * x2 + x) / n2
                    + ((1.0 - 2.0 * x) / (n3 * n1)
                        + 3.0 * (n - 3.0) * x2 / (n2 * n1)
                        - 6.0 * x3 / n2
                        + (3.0 * n2 + 3.0 * n + 1.0) * p / (n3 * n1)
                        - q / (n3 * n1))
                        * lam
            }
            4 => {
                let n2 = n * n;
                let n3 = n2 * n;
                let n4 = n3 * n;
                x4 + 6.0 * x3 * (1.0 - x) / n
                    + (7.0 * x2 - 18.0 * x3 + 11.0 * x4) / n2
                    + (x - 7.0 * x2 + 12.0 * x3 - 6.0 * x4) / n3
                    + (-1.0 / (n4 * n1)
                        + 2.0 * x / (n3 * n1)
                        + 2.0 * (3.0 * n - 11.0) * x2 / (n3 * n1)
                        + 4.0 * (n - 8.0) * x3 / n3
                        - 8.0 * (n - 2.0) * x4 / n3
                        + (2.0 * n + 1.0) * (2.0 * n2 + 2.0 * n + 1.0) * p / (n4 * n1)
                        + q / (n4 * n1))
                        * lam
            }
            _ => return Err(Error::UnsupportedMomentOrder(j)),
        };
        Ok(v)
    }

    /// `Σ (i/n)^j b̃_{n,i}(λ; x)` by direct summation, for any order.
    pub fn raw_moment_oracle(&self, j: usize, x: f64) -> Result<f64> {
        let basis = basis::lambda_basis(self.n, self.lambda, x)?;
        let nf = self.degree() as f64;
        Ok(basis
            .values
            .iter()
            .enumerate()
            .map(|(i, b)| (i as f64 / nf).powi(j as i32) * b)
            .sum())
    }

    /// `(β_n(x), α_n(x))`, the first and second central moments.
    pub fn central_moments(&self, x: f64) -> Result<(f64, f64)> {
        let m1 = self.raw_moment(1, x)?;
        let m2 = self.raw_moment(2, x)?;
        Ok((m1 - x, m2 - 2.0 * x * m1 + x * x))
    }

    pub fn moments(&self, x: f64) -> Result<MomentSet> {
        let mut raw = [0.0; 5];
        for (j, r) in raw.iter_mut().enumerate() {
            *r = self.raw_moment(j, x)?;
        }
        let (beta, alpha) = self.central_moments(x)?;
        Ok(MomentSet { at: x, raw, beta, alpha })
    }

    /// `max_{x ∈ grid} |B_{n,λ}(f; x) - f(x)|`.
    pub fn sup_error(&self, f: &FunctionHandle, grid: &[f64]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for &x in grid {
            check_point(x)?;
        }
        let op = self.prepare(f);
        Ok(grid.iter().map(|&x| (op.eval(x) - f.eval(x)).abs()).fold(0.0, f64::max))
    }
}

/// `count` equally spaced points covering `[0, 1]`, endpoints included.
pub fn uniform_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..count).map(|i| i as f64 / (count - 1) as f64).collect(),
    }
}

/// `count` equally spaced points strictly inside `(0, 1)`: `i/(count+1)`.
pub fn interior_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|i| i as f64 / (count + 1) as f64).collect()
}
