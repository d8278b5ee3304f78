//! Grid estimators for moduli of continuity and smoothness on `[0, 1]`.
//!
//! Every estimator takes the supremum of a difference over a uniform grid of
//! base points `x = i/r` (`i = 0..=r`) and steps `h = δ·j/r` (`j = 1..=r`), then
//! refines once around the coarse maximiser: `±1` coarse cell in both `x` and
//! `h` at 32× density. The result is a lower estimate of the true supremum.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 512;
pub const MIN_RESOLUTION: usize = 64;
const REFINE_DENSITY: i64 = 32;

/// Name of the environment variable that overrides [`DEFAULT_RESOLUTION`].
pub const RESOLUTION_ENV: &str = "LB_RESOLUTION";

/// [`DEFAULT_RESOLUTION`] unless `LB_RESOLUTION` holds a usable value.
pub fn default_resolution() -> usize {
    std::env::var(RESOLUTION_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&r| r >= MIN_RESOLUTION)
        .unwrap_or(DEFAULT_RESOLUTION)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulusKind {
    First,
    DtFirstStepweight,
    DtFirstMidpoint,
    DtSecond,
    BivariateComplete,
    BivariatePartialX,
    BivariatePartialY,
}

impl ModulusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModulusKind::First => "first",
            ModulusKind::DtFirstStepweight => "dt_first_stepweight",
            ModulusKind::DtFirstMidpoint => "dt_first_midpoint",
            ModulusKind::DtSecond => "dt_second",
            ModulusKind::BivariateComplete => "bivariate_complete",
            ModulusKind::BivariatePartialX => "bivariate_partial_x",
            ModulusKind::BivariatePartialY => "bivariate_partial_y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusEstimate {
    pub value: f64,
    pub delta: f64,
    pub resolution: usize,
    pub kind: ModulusKind,
}

/// The canonical Ditzian–Totik step weight `φ(x) = √(x(1-x))`.
pub fn dt_weight(x: f64) -> f64 {
    (x * (1.0 - x)).max(0.0).sqrt()
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveDelta(delta))
    }
}

pub(crate) fn check_resolution(resolution: usize) -> Result<()> {
    if resolution >= MIN_RESOLUTION {
        Ok(())
    } else {
        Err(Error::ResolutionTooSmall { got: resolution, min: MIN_RESOLUTION })
    }
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Supremum of `g(x, h)` over the coarse grid plus one refinement pass.
/// `g` returns `None` for inadmissible pairs. With `signed`, negative steps
/// `-h` are searched as well.
fn grid_sup(resolution: usize, delta: f64, signed: bool, g: impl Fn(f64, f64) -> Option<f64> + Sync) -> f64 {
    let r = resolution as f64;
    let dx = 1.0 / r;
    let dh = delta / r;
    let signs: &[f64] = if signed { &[1.0, -1.0] } else { &[1.0] };

    // Rows run in parallel; ties keep the lowest index so the result is deterministic.
    let (mut best, arg) = (0..=resolution)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * dx;
            let mut row: (f64, Option<(f64, f64)>) = (0.0, None);
            for j in 1..=resolution {
                let h = if j == resolution { delta } else { j as f64 * dh };
                for &s in signs {
                    if let Some(v) = g(x, s * h) {
                        if v > row.0 {
                            row = (v, Some((x, s * h)));
                        }
                    }
                }
            }
            row
        })
        .reduce(|| (0.0, None), |a, b| if b.0 > a.0 { b } else { a });

    if let Some((x0, h0)) = arg {
        let sign = h0.signum();
        for a in -REFINE_DENSITY..=REFINE_DENSITY {
            let x = x0 + a as f64 * dx / REFINE_DENSITY as f64;
            if !in_unit(x) {
                continue;
            }
            for b in -REFINE_DENSITY..=REFINE_DENSITY {
                let h = h0.abs() + b as f64 * dh / REFINE_DENSITY as f64;
                if h <= 0.0 || h > delta {
                    continue;
                }
                if let Some(v) = g(x, sign * h) {
                    if v > best {
                        best = v;
                    }
                }
            }
        }
    }
    best
}

/// Classical modulus of continuity `ω(f, δ) = sup_{|s-t| ≤ δ} |f(s) - f(t)|`,
/// searched over steps of both signs like the weighted variants.
pub fn modulus_first(f: impl Fn(f64) -> f64 + Sync, delta: f64, resolution: usize) -> Result<ModulusEstimate> {
    check_delta(delta)?;
    check_resolution(resolution)?;
    let value = grid_sup(resolution, delta, true, |x, h| {
        let y = x + h;
        in_unit(y).then(|| (f(y) - f(x)).abs())
    });
    Ok(ModulusEstimate { value, delta, resolution, kind: ModulusKind::First })
}

/// First-order modulus with step weight `ξ`: `sup |f(x + hξ(x)) - f(x)|` over
/// `0 < |h| ≤ δ` with both points in `[0, 1]`.
pub fn modulus_dt_first(
    f: impl Fn(f64) -> f64 + Sync,
    delta: f64,
    stepweight: impl Fn(f64) -> f64 + Sync,
    resolution: usize,
) -> Result<ModulusEstimate> {
    check_delta(delta)?;
    check_resolution(resolution)?;
    for i in 0..=resolution {
        let x = i as f64 / resolution as f64;
        let w = stepweight(x);
        if w < 0.0 || w.is_nan() {
            return Err(Error::NegativeStepWeight { x, value: w });
        }
    }
    let value = grid_sup(resolution, delta, true, |x, h| {
        let w = stepweight(x);
        if w < 0.0 {
            return None;
        }
        let y = x + h * w;
        in_unit(y).then(|| (f(y) - f(x)).abs())
    });
    Ok(ModulusEstimate { value, delta, resolution, kind: ModulusKind::DtFirstStepweight })
}

/// Second-order Ditzian–Totik modulus with the canonical weight `φ(x) = √(x(1-x))`.
pub fn modulus_dt_second(f: impl Fn(f64) -> f64 + Sync, delta: f64, resolution: usize) -> Result<ModulusEstimate> {
    modulus_dt_second_with(f, delta, dt_weight, resolution)
}

/// `sup |f(x + hφ(x)) - 2f(x) + f(x - hφ(x))|` over `0 < h ≤ δ`, both shifted points in `[0, 1]`.
pub fn modulus_dt_second_with(
    f: impl Fn(f64) -> f64 + Sync,
    delta: f64,
    phi: impl Fn(f64) -> f64 + Sync,
    resolution: usize,
) -> Result<ModulusEstimate> {
    check_delta(delta)?;
    check_resolution(resolution)?;
    let value = grid_sup(resolution, delta, false, |x, h| {
        let step = h * phi(x);
        let (lo, hi) = (x - step, x + step);
        (in_unit(lo) && in_unit(hi)).then(|| (f(hi) - 2.0 * f(x) + f(lo)).abs())
    });
    Ok(ModulusEstimate { value, delta, resolution, kind: ModulusKind::DtSecond })
}

/// Midpoint modulus `sup |f(x + hφ(x)/2) - f(x - hφ(x)/2)|` with `φ(x) = √(x(1-x))`.
pub fn modulus_dt_midpoint(f: impl Fn(f64) -> f64 + Sync, delta: f64, resolution: usize) -> Result<ModulusEstimate> {
    check_delta(delta)?;
    check_resolution(resolution)?;
    let value = grid_sup(resolution, delta, false, |x, h| {
        let half = 0.5 * h * dt_weight(x);
        let (lo, hi) = (x - half, x + half);
        (in_unit(lo) && in_unit(hi)).then(|| (f(hi) - f(lo)).abs())
    });
    Ok(ModulusEstimate { value, delta, resolution, kind: ModulusKind::DtFirstMidpoint })
}

/// Parameters of the class `|f(t) - f(x)| ≤ M |t-x|^η / (k1 x² + k2 x + t)^{η/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzSpec {
    pub m: f64,
    pub eta: f64,
    pub k1: f64,
    pub k2: f64,
}

impl LipschitzSpec {
    pub fn new(m: f64, eta: f64, k1: f64, k2: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidLipschitz(format!("M must be positive, got {m}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidLipschitz(format!("eta must lie in (0, 1], got {eta}")));
        }
        if !(k1 >= 0.0) {
            return Err(Error::InvalidLipschitz(format!("k1 must be nonnegative, got {k1}")));
        }
        if !(k2 > 0.0) {
            return Err(Error::InvalidLipschitz(format!("k2 must be positive, got {k2}")));
        }
        Ok(Self { m, eta, k1, k2 })
    }

    /// Right-hand side of the defining inequality.
    pub fn envelope(&self, x: f64, t: f64) -> f64 {
        self.m * (t - x).abs().powf(self.eta) / (self.k1 * x * x + self.k2 * x + t).powf(self.eta / 2.0)
    }
}

/// The grid pair where `|f(t) - f(x)|` comes closest to (or furthest past) the envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzWitness {
    pub x: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl LipschitzWitness {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub holds: bool,
    /// Pair maximising `lhs / rhs`; `None` when `f` takes one value on the grid.
    pub worst: Option<LipschitzWitness>,
}

/// Checks class membership on the grid `x = i/r (i ≥ 1)`, `t = j/r (j ≥ 0)`.
pub fn lipschitz_check(f: impl Fn(f64) -> f64, spec: &LipschitzSpec, resolution: usize) -> Result<LipschitzReport> {
    check_resolution(resolution)?;
    let r = resolution as f64;
    let values: Vec<f64> = (0..=resolution).map(|j| f(j as f64 / r)).collect();
    let mut worst: Option<LipschitzWitness> = None;
    for i in 1..=resolution {
        let x = i as f64 / r;
        for (j, &ft) in values.iter().enumerate() {
            if j == i {
                continue;
            }
            let t = j as f64 / r;
            let lhs = (ft - values[i]).abs();
            if lhs == 0.0 {
                continue;
            }
            let rhs = spec.envelope(x, t);
            let candidate = LipschitzWitness { x, t, lhs, rhs };
            if worst.map_or(true, |w| candidate.ratio() > w.ratio()) {
                worst = Some(candidate);
            }
        }
    }
    let holds = worst.map_or(true, |w| w.lhs <= w.rhs * (1.0 + 1e-12));
    Ok(LipschitzReport { holds, worst })
}
