//! Tensor-product λ-Bernstein operators on `[0, 1]²`.
//!
//! `B(f; x, y) = Σ_{k₁} Σ_{k₂} f(k₁/n, k₂/m) b̃_{n,k₁}(λ; x) b̃_{m,k₂}(λ; y)` with one
//! shared shape parameter. Sums run with `k₁` outer and `k₂` inner.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::basis::{check_point, lambda_basis, Degree, ShapeParam};
use crate::bounds::{delta_n, BoundKind, BoundReport};
use crate::error::{Error, Result};
use crate::smoothness::{check_delta, check_resolution, ModulusEstimate, ModulusKind};
use crate::univariate::OperatorSpec;

/// Resolution used by the bivariate moduli when none is configured.
pub const DEFAULT_BIVARIATE_RESOLUTION: usize = 128;

/// `LB_RESOLUTION` when set to a usable value, else [`DEFAULT_BIVARIATE_RESOLUTION`].
pub fn default_bivariate_resolution() -> usize {
    std::env::var(crate::smoothness::RESOLUTION_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&r| r >= crate::smoothness::MIN_RESOLUTION)
        .unwrap_or(DEFAULT_BIVARIATE_RESOLUTION)
}

/// Errors at or below this level count as exact when judging monotone decay.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

pub type RealFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct BivariateFunction {
    name: String,
    f: RealFn2,
}

impl fmt::Debug for BivariateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BivariateFunction({})", self.name)
    }
}

impl BivariateFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}

/// Names accepted by [`bivariate_catalog`].
pub const BIVARIATE_CATALOG: &[&str] = &["const1", "e10", "e01", "e20_plus_e02", "prod", "exp_sum", "ripple"];

pub fn bivariate_catalog(name: &str) -> Option<BivariateFunction> {
    let f = match name {
        "const1" => BivariateFunction::new(name, |_, _| 1.0),
        "e10" => BivariateFunction::new(name, |s, _| s),
        "e01" => BivariateFunction::new(name, |_, t| t),
        "e20_plus_e02" => BivariateFunction::new(name, |s, t| s * s + t * t),
        "prod" => BivariateFunction::new(name, |s, t| s * t),
        "exp_sum" => BivariateFunction::new(name, |s, t| (s + t).exp()),
        "ripple" => BivariateFunction::new(name, |s, t| (PI * s).sin() * (PI * t).sin()),
        _ => return None,
    };
    Some(f)
}

/// Monomials with closed-form bivariate moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monomial2 {
    One,
    S,
    T,
    S2,
    T2,
}

impl Monomial2 {
    pub const ALL: [Monomial2; 5] = [Monomial2::One, Monomial2::S, Monomial2::T, Monomial2::S2, Monomial2::T2];

    pub fn as_str(self) -> &'static str {
        match self {
            Monomial2::One => "1",
            Monomial2::S => "s",
            Monomial2::T => "t",
            Monomial2::S2 => "s2",
            Monomial2::T2 => "t2",
        }
    }

    pub fn eval(self, s: f64, t: f64) -> f64 {
        match self {
            Monomial2::One => 1.0,
            Monomial2::S => s,
            Monomial2::T => t,
            Monomial2::S2 => s * s,
            Monomial2::T2 => t * t,
        }
    }

    pub fn function(self) -> BivariateFunction {
        BivariateFunction::new(self.as_str(), move |s, t| self.eval(s, t))
    }
}

impl FromStr for Monomial2 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Monomial2::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnsupportedMonomial(s.to_string()))
    }
}

/// Degrees `n` (in `x`) and `m` (in `y`) with a shared `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateSpec {
    n: Degree,
    m: Degree,
    lambda: ShapeParam,
}

impl BivariateSpec {
    pub fn new(n: usize, m: usize, lambda: f64) -> Result<Self> {
        Ok(Self { n: Degree::new(n)?, m: Degree::new(m)?, lambda: ShapeParam::new(lambda)? })
    }

    pub fn n(&self) -> usize {
        self.n.get()
    }

    pub fn m(&self) -> usize {
        self.m.get()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.value()
    }

    /// The univariate operator acting in `x`.
    pub fn x_spec(&self) -> OperatorSpec {
        OperatorSpec::new(self.n(), self.lambda()).expect("validated")
    }

    /// The univariate operator acting in `y`.
    pub fn y_spec(&self) -> OperatorSpec {
        OperatorSpec::new(self.m(), self.lambda()).expect("validated")
    }

    /// Samples `f` at the nodes once for repeated evaluation.
    pub fn prepare(&self, f: &BivariateFunction) -> PreparedBivariate {
        let (n, m) = (self.n(), self.m());
        let nodes = (0..=n)
            .flat_map(|k1| (0..=m).map(move |k2| (k1, k2)))
            .map(|(k1, k2)| f.eval(k1 as f64 / n as f64, k2 as f64 / m as f64))
            .collect();
        PreparedBivariate { spec: *self, nodes }
    }

    pub fn apply2(&self, f: &BivariateFunction, x: f64, y: f64) -> Result<f64> {
        self.prepare(f).eval(x, y)
    }

    /// Closed-form moments; each equals the univariate moment in its own variable.
    pub fn raw_moment2(&self, which: Monomial2, x: f64, y: f64) -> Result<f64> {
        check_point(x)?;
        check_point(y)?;
        match which {
            Monomial2::One => Ok(1.0),
            Monomial2::S => self.x_spec().raw_moment(1, x),
            Monomial2::T => self.y_spec().raw_moment(1, y),
            Monomial2::S2 => self.x_spec().raw_moment(2, x),
            Monomial2::T2 => self.y_spec().raw_moment(2, y),
        }
    }

    /// `max |B f - f|` over `grid`.
    pub fn sup_error(&self, f: &BivariateFunction, grid: &[(f64, f64)]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let prepared = self.prepare(f);
        grid.iter().try_fold(0.0f64, |acc, &(x, y)| Ok(acc.max((prepared.eval(x, y)? - f.eval(x, y)).abs())))
    }
}

#[derive(Debug, Clone)]
pub struct PreparedBivariate {
    spec: BivariateSpec,
    /// `f(k₁/n, k₂/m)` at index `k₁ (m + 1) + k₂`.
    nodes: Vec<f64>,
}

impl PreparedBivariate {
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let bx = lambda_basis(self.spec.n, self.spec.lambda, x)?;
        let by = lambda_basis(self.spec.m, self.spec.lambda, y)?;
        let stride = self.spec.m() + 1;
        let mut total = 0.0;
        for (k1, wx) in bx.values.iter().enumerate() {
            let row = &self.nodes[k1 * stride..(k1 + 1) * stride];
            let inner: f64 = row.iter().zip(&by.values).map(|(v, wy)| v * wy).sum();
            total += wx * inner;
        }
        Ok(total)
    }
}

/// `count × count` uniform grid on `[0, 1]²`, `x`-major.
pub fn grid2(count: usize) -> Vec<(f64, f64)> {
    let g = crate::univariate::uniform_grid(count);
    g.iter().flat_map(|&x| g.iter().map(move |&y| (x, y))).collect()
}

/// `count × count` grid of interior points `i/(count + 1)`, `x`-major.
pub fn interior_grid2(count: usize) -> Vec<(f64, f64)> {
    let g = crate::univariate::interior_grid(count);
    g.iter().flat_map(|&x| g.iter().map(move |&y| (x, y))).collect()
}

/// Centred sliding-window max and min with half-width `w`, clipped at the ends.
fn window_extrema(v: &[f64], w: usize) -> (Vec<f64>, Vec<f64>) {
    let len = v.len();
    let mut hi = vec![0.0; len];
    let mut lo = vec![0.0; len];
    let mut qmax: VecDeque<usize> = VecDeque::new();
    let mut qmin: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..len {
        let right = (i + w).min(len - 1);
        while next <= right {
            while qmax.back().is_some_and(|&b| v[b] <= v[next]) {
                qmax.pop_back();
            }
            qmax.push_back(next);
            while qmin.back().is_some_and(|&b| v[b] >= v[next]) {
                qmin.pop_back();
            }
            qmin.push_back(next);
            next += 1;
        }
        let left = i.saturating_sub(w);
        while qmax.front().is_some_and(|&f| f < left) {
            qmax.pop_front();
        }
        while qmin.front().is_some_and(|&f| f < left) {
            qmin.pop_front();
        }
        hi[i] = v[qmax[0]];
        lo[i] = v[qmin[0]];
    }
    (hi, lo)
}

/// `sup |f(s,t) - f(x,y)|` over `|s-x| ≤ dx`, `|t-y| ≤ dy` on the grid `i/r`,
/// plus the exact offsets `(±dx | 0, ±dy | 0)` from every grid point.
fn rectangle_sup(f: &BivariateFunction, dx: f64, dy: f64, resolution: usize) -> f64 {
    let r = resolution;
    let side = r + 1;
    let h = 1.0 / r as f64;
    let values: Vec<f64> =
        (0..side).flat_map(|i| (0..side).map(move |j| (i, j))).map(|(i, j)| f.eval(i as f64 * h, j as f64 * h)).collect();

    let cells = |d: f64| ((d * r as f64) * (1.0 + 1e-12)).floor() as usize;
    let (wx, wy) = (cells(dx), cells(dy));

    // along y for each fixed x, then along x
    let mut ymax = vec![0.0; values.len()];
    let mut ymin = vec![0.0; values.len()];
    for i in 0..side {
        let (hi, lo) = window_extrema(&values[i * side..(i + 1) * side], wy);
        ymax[i * side..(i + 1) * side].copy_from_slice(&hi);
        ymin[i * side..(i + 1) * side].copy_from_slice(&lo);
    }
    let mut best: f64 = 0.0;
    let mut column = vec![0.0; side];
    for j in 0..side {
        column.iter_mut().enumerate().for_each(|(i, c)| *c = ymax[i * side + j]);
        let (hi, _) = window_extrema(&column, wx);
        column.iter_mut().enumerate().for_each(|(i, c)| *c = ymin[i * side + j]);
        let (_, lo) = window_extrema(&column, wx);
        for i in 0..side {
            let v = values[i * side + j];
            best = best.max(hi[i] - v).max(v - lo[i]);
        }
    }

    let xs: &[f64] = if dx > 0.0 { &[-dx, 0.0, dx] } else { &[0.0] };
    let ys: &[f64] = if dy > 0.0 { &[-dy, 0.0, dy] } else { &[0.0] };
    for i in 0..side {
        for j in 0..side {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let v = values[i * side + j];
            for &a in xs {
                for &b in ys {
                    let (s, t) = (x + a, y + b);
                    if (a != 0.0 || b != 0.0) && (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
                        best = best.max((f.eval(s, t) - v).abs());
                    }
                }
            }
        }
    }
    best
}

/// Complete modulus in rectangle form:
/// `sup { |f(s,t) - f(x,y)| : |s-x| ≤ δx, |t-y| ≤ δy }`.
pub fn complete_modulus(f: &BivariateFunction, delta_x: f64, delta_y: f64, resolution: usize) -> Result<ModulusEstimate> {
    check_delta(delta_x)?;
    check_delta(delta_y)?;
    check_resolution(resolution)?;
    Ok(ModulusEstimate {
        value: rectangle_sup(f, delta_x.min(1.0), delta_y.min(1.0), resolution),
        delta: delta_x.max(delta_y),
        resolution,
        kind: ModulusKind::BivariateComplete,
    })
}

/// Complete modulus in Euclidean form: `sup { |f(s,t) - f(x,y)| : |(s,t) - (x,y)| ≤ δ }`.
///
/// Work grows like `r² (δ r)²`; keep the resolution modest.
pub fn complete_modulus_euclidean(f: &BivariateFunction, delta: f64, resolution: usize) -> Result<ModulusEstimate> {
    check_delta(delta)?;
    check_resolution(resolution)?;
    let r = resolution;
    let side = r + 1;
    let h = 1.0 / r as f64;
    let reach = (delta.min(2f64.sqrt()) * r as f64 * (1.0 + 1e-12)).floor() as i64;
    let values: Vec<f64> =
        (0..side).flat_map(|i| (0..side).map(move |j| (i, j))).map(|(i, j)| f.eval(i as f64 * h, j as f64 * h)).collect();

    // Half-plane stencil: |f(p + o) - f(p)| is symmetric in o.
    let stencil: Vec<(i64, i64)> = (0..=reach)
        .flat_map(|a| (-reach..=reach).map(move |b| (a, b)))
        .filter(|&(a, b)| (a > 0 || b > 0) && a * a + b * b <= reach * reach)
        .collect();
    let directions: Vec<(f64, f64)> = (0..16).map(|k| PI * k as f64 / 8.0).map(|t| (delta * t.cos(), delta * t.sin())).collect();

    let mut best: f64 = 0.0;
    for i in 0..side as i64 {
        for j in 0..side as i64 {
            let v = values[(i as usize) * side + j as usize];
            for &(a, b) in &stencil {
                let (s, t) = (i + a, j + b);
                if (0..side as i64).contains(&s) && (0..side as i64).contains(&t) {
                    best = best.max((values[s as usize * side + t as usize] - v).abs());
                }
            }
            let (x, y) = (i as f64 * h, j as f64 * h);
            for &(a, b) in &directions {
                let (s, t) = (x + a, y + b);
                if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
                    best = best.max((f.eval(s, t) - v).abs());
                }
            }
        }
    }
    Ok(ModulusEstimate { value: best, delta, resolution, kind: ModulusKind::BivariateComplete })
}

/// Partial moduli `(ω₁, ω₂)`: vary one coordinate by at most `δ`, keep the other fixed.
pub fn partial_moduli(f: &BivariateFunction, delta: f64, resolution: usize) -> Result<(ModulusEstimate, ModulusEstimate)> {
    check_delta(delta)?;
    check_resolution(resolution)?;
    let d = delta.min(1.0);
    let estimate = |value, kind| ModulusEstimate { value, delta, resolution, kind };
    Ok((
        estimate(rectangle_sup(f, d, 0.0, resolution), ModulusKind::BivariatePartialX),
        estimate(rectangle_sup(f, 0.0, d, resolution), ModulusKind::BivariatePartialY),
    ))
}

/// `|B f - f| ≤ 4 ω(f; √δ_n(x), √δ_m(y))` with the rectangle modulus.
pub fn bound_bivariate(spec: &BivariateSpec, f: &BivariateFunction, x: f64, y: f64, resolution: usize) -> Result<BoundReport> {
    let error = (spec.apply2(f, x, y)? - f.eval(x, y)).abs();
    let dx = delta_n(&spec.x_spec(), x)?.sqrt();
    let dy = delta_n(&spec.y_spec(), y)?.sqrt();
    // δ vanishes at the edges, where the operator interpolates in that direction.
    check_resolution(resolution)?;
    let bound = if dx > 0.0 || dy > 0.0 { 4.0 * rectangle_sup(f, dx.min(1.0), dy.min(1.0), resolution) } else { 0.0 };
    Ok(BoundReport::new(BoundKind::Bivariate, x, Some(y), error, bound))
}

/// `ρ(x, y) = x² + y² + 1`.
pub fn rho(x: f64, y: f64) -> f64 {
    x * x + y * y + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoNorm {
    /// `sup_grid |g| / ρ`.
    pub value: f64,
}

/// Weighted error `sup_grid |B f - f| / ρ`.
pub fn rho_norm_error(spec: &BivariateSpec, f: &BivariateFunction, grid: &[(f64, f64)]) -> Result<RhoNorm> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let prepared = spec.prepare(f);
    let value = grid
        .iter()
        .try_fold(0.0f64, |acc, &(x, y)| Ok::<_, Error>(acc.max((prepared.eval(x, y)? - f.eval(x, y)).abs() / rho(x, y))))?;
    Ok(RhoNorm { value })
}

/// True when each step decreases strictly, unless both ends sit at the roundoff floor.
pub fn strictly_decreasing(column: &[f64]) -> bool {
    column.windows(2).all(|w| w[1] < w[0] || (w[0] <= ROUNDOFF_FLOOR && w[1] <= ROUNDOFF_FLOOR))
}

/// The Volkov test functions `1, s, t, s² + t²`.
pub const VOLKOV_FUNCTIONS: [&str; 4] = ["const1", "e10", "e01", "e20_plus_e02"];

#[derive(Debug, Clone, PartialEq)]
pub struct VolkovTable {
    pub lambda: f64,
    /// Degrees with `n = m`.
    pub ladder: Vec<usize>,
    /// `columns[f][i]`: sup-error of `VOLKOV_FUNCTIONS[f]` at `ladder[i]`.
    pub columns: [Vec<f64>; 4],
    pub decreasing: bool,
    /// Every last entry is at most `5 / n`.
    pub final_small: bool,
}

/// Sup-errors of the Volkov test functions along `n = m ∈ ladder`.
pub fn volkov_check(lambda: f64, ladder: &[usize], grid: &[(f64, f64)]) -> Result<VolkovTable> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidLadder);
    }
    let mut columns: [Vec<f64>; 4] = Default::default();
    for (col, name) in columns.iter_mut().zip(VOLKOV_FUNCTIONS) {
        let f = bivariate_catalog(name).expect("catalog entry");
        for &n in ladder {
            col.push(BivariateSpec::new(n, n, lambda)?.sup_error(&f, grid)?);
        }
    }
    let last = *ladder.last().expect("nonempty");
    let decreasing = columns.iter().all(|c| strictly_decreasing(c));
    let final_small = columns.iter().all(|c| c[c.len() - 1] <= 5.0 / last as f64);
    Ok(VolkovTable { lambda, ladder: ladder.to_vec(), columns, decreasing, final_small })
}
