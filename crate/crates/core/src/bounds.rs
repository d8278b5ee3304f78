//! Pointwise error bounds for `B_{n,λ}` and the Voronovskaja residual.
//!
//! Notation: `β_n(x)` and `α_n(x)` are the first and second central moments of
//! the operator at `x`, and `δ_n(x) = √(α_n(x) + β_n(x)²)`.

use crate::error::{Error, Result};
use crate::function::FunctionHandle;
use crate::smoothness::{self, dt_weight, LipschitzSpec};
use crate::univariate::OperatorSpec;

/// Slack allowed when comparing a bound with the error it dominates.
pub const HOLDS_SLACK: f64 = 1e-12;

/// Multiplier of the second-order modulus in the global bound. The smallest
/// power of two for which every fixture of the test suite holds.
pub const GLOBAL_CONSTANT: f64 = 4.0;

/// Multiplier used when tabulating the Voronovskaja right-hand side.
pub const VORONOVSKAJA_CONSTANT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// `C ω₂^φ(f, δ_n/(2φ)) + ω_ξ(f, β_n/ξ)`
    Global,
    /// `M α_n^{η/2} (k1 x² + k2 x)^{-η/2}`
    Lipschitz,
    /// `|β_n| |f'| + 2√α_n ω(f', √α_n)`
    C1,
    /// `(C/n) φ² ω_φ(f'', n^{-1/2})`
    Voronovskaja,
    /// `4 ω(f; √δ_n(x), √δ_m(y))`
    Bivariate,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Global => "global",
            BoundKind::Lipschitz => "lipschitz",
            BoundKind::C1 => "c1",
            BoundKind::Voronovskaja => "voronovskaja",
            BoundKind::Bivariate => "bivariate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub x: f64,
    pub y: Option<f64>,
    pub error: f64,
    pub bound: f64,
    pub holds: bool,
    pub kind: BoundKind,
}

impl BoundReport {
    pub fn new(kind: BoundKind, x: f64, y: Option<f64>, error: f64, bound: f64) -> Self {
        Self { x, y, error, bound, holds: bound + HOLDS_SLACK >= error, kind }
    }
}

/// `δ_n(x) = √(α_n(x) + β_n(x)²)`; a slightly negative `α_n` from rounding is clamped to 0.
pub fn delta_n(spec: &OperatorSpec, x: f64) -> Result<f64> {
    let (beta, alpha) = spec.central_moments(x)?;
    Ok((alpha.max(0.0) + beta * beta).sqrt())
}

fn pointwise_error(spec: &OperatorSpec, f: &FunctionHandle, x: f64) -> Result<f64> {
    Ok((spec.apply(f, x)? - f.eval(x)).abs())
}

/// Global bound with the default constant [`GLOBAL_CONSTANT`].
///
/// `φ` is the weight of the second-order modulus (`φ²` concave is assumed, not
/// checked) and `ξ` the step weight of the first-order one.
pub fn bound_global(
    spec: &OperatorSpec,
    f: &FunctionHandle,
    x: f64,
    phi: impl Fn(f64) -> f64 + Sync,
    xi: impl Fn(f64) -> f64 + Sync,
    resolution: usize,
) -> Result<BoundReport> {
    bound_global_with_constant(spec, f, x, phi, xi, resolution, GLOBAL_CONSTANT)
}

pub fn bound_global_with_constant(
    spec: &OperatorSpec,
    f: &FunctionHandle,
    x: f64,
    phi: impl Fn(f64) -> f64 + Sync,
    xi: impl Fn(f64) -> f64 + Sync,
    resolution: usize,
    constant: f64,
) -> Result<BoundReport> {
    let phi_x = phi(x);
    if phi_x == 0.0 {
        return Err(Error::Singular { what: "step weight φ", x });
    }
    let xi_x = xi(x);
    if xi_x == 0.0 {
        return Err(Error::Singular { what: "step weight ξ", x });
    }
    let error = pointwise_error(spec, f, x)?;
    let (beta, _) = spec.central_moments(x)?;
    let delta = delta_n(spec, x)?;

    let second_step = delta / (2.0 * phi_x);
    let second = if second_step > 0.0 {
        smoothness::modulus_dt_second_with(|t| f.eval(t), second_step, &phi, resolution)?.value
    } else {
        0.0
    };
    let first_step = beta.abs() / xi_x;
    let first = if first_step > 0.0 {
        smoothness::modulus_dt_first(|t| f.eval(t), first_step, &xi, resolution)?.value
    } else {
        0.0
    };
    Ok(BoundReport::new(BoundKind::Global, x, None, error, constant * second + first))
}

/// Local bound for the two-parameter Lipschitz class; singular at `x = 0`.
pub fn bound_lipschitz(spec: &OperatorSpec, f: &FunctionHandle, lip: &LipschitzSpec, x: f64) -> Result<BoundReport> {
    if x <= 0.0 {
        return Err(Error::Singular { what: "k1·x² + k2·x", x });
    }
    let error = pointwise_error(spec, f, x)?;
    let (_, alpha) = spec.central_moments(x)?;
    let weight = lip.k1 * x * x + lip.k2 * x;
    let bound = lip.m * alpha.max(0.0).powf(lip.eta / 2.0) * weight.powf(-lip.eta / 2.0);
    Ok(BoundReport::new(BoundKind::Lipschitz, x, None, error, bound))
}

/// Bound for `f ∈ C¹`: `|β_n||f'(x)| + 2√α_n · ω(f', √α_n)`.
pub fn bound_c1(spec: &OperatorSpec, f: &FunctionHandle, x: f64, resolution: usize) -> Result<BoundReport> {
    let df = f.derivative()?;
    let error = pointwise_error(spec, f, x)?;
    let (beta, alpha) = spec.central_moments(x)?;
    let root = alpha.max(0.0).sqrt();
    let modulus = if root > 0.0 {
        smoothness::modulus_first(|t| df.eval(t), root, resolution)?.value
    } else {
        0.0
    };
    let slope_term = if beta == 0.0 { 0.0 } else { beta.abs() * df.eval(x).abs() };
    Ok(BoundReport::new(BoundKind::C1, x, None, error, slope_term + 2.0 * root * modulus))
}

/// How the second-order coefficient of the Voronovskaja expansion is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondOrderCoefficient {
    /// `α_n(x)/2`, which makes the residual vanish on quadratics.
    #[default]
    HalfAlpha,
    /// `(α_n(x) + 1)/2`, kept for comparison.
    AlphaPlusOneHalf,
}

/// `R_n(x) = B_{n,λ}(f;x) - f(x) - β_n(x) f'(x) - (α_n(x)/2) f''(x)`.
pub fn voronovskaja_residual(spec: &OperatorSpec, f: &FunctionHandle, x: f64) -> Result<f64> {
    voronovskaja_residual_with(spec, f, x, SecondOrderCoefficient::HalfAlpha)
}

pub fn voronovskaja_residual_with(
    spec: &OperatorSpec,
    f: &FunctionHandle,
    x: f64,
    coefficient: SecondOrderCoefficient,
) -> Result<f64> {
    let d1 = f.first(x)?;
    let d2 = f.second(x)?;
    let (beta, alpha) = spec.central_moments(x)?;
    let second = match coefficient {
        SecondOrderCoefficient::HalfAlpha => alpha / 2.0,
        SecondOrderCoefficient::AlphaPlusOneHalf => (alpha + 1.0) / 2.0,
    };
    Ok(spec.apply(f, x)? - f.eval(x) - beta * d1 - second * d2)
}

/// `(C/n) φ²(x) ω_φ(f'', n^{-1/2})` with the midpoint modulus.
pub fn voronovskaja_rhs(spec: &OperatorSpec, f: &FunctionHandle, x: f64, resolution: usize, constant: f64) -> Result<f64> {
    let d2 = f.second_derivative()?;
    let n = spec.degree() as f64;
    let modulus = smoothness::modulus_dt_midpoint(|t| d2.eval(t), n.powf(-0.5), resolution)?.value;
    let phi = dt_weight(x);
    Ok(constant / n * phi * phi * modulus)
}

/// `n (B_{n,λ}(f; x) - f(x))`.
pub fn voronovskaja_limit(spec: &OperatorSpec, f: &FunctionHandle, x: f64) -> Result<f64> {
    Ok(spec.degree() as f64 * (spec.apply(f, x)? - f.eval(x)))
}

/// The limit `x(1-x) f''(x) / 2` approached by [`voronovskaja_limit`].
pub fn voronovskaja_target(f: &FunctionHandle, x: f64) -> Result<f64> {
    Ok(x * (1.0 - x) * f.second(x)? / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::catalog;
    use crate::smoothness::DEFAULT_RESOLUTION as R;
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, l: f64) -> OperatorSpec {
        OperatorSpec::new(n, l).unwrap()
    }

    #[test]
    fn delta_n_identity() {
        for &(n, l, x) in &[(2, 1.0, 0.25), (10, -0.5, 0.9), (77, 0.3, 0.01)] {
            let s = spec(n, l);
            let (b, a) = s.central_moments(x).unwrap();
            assert_abs_diff_eq!(delta_n(&s, x).unwrap().powi(2), a + b * b, epsilon = 1e-12);
        }
    }

    #[test]
    fn global_bound_cases() {
        let c = FunctionHandle::constant(2.0);
        let r = bound_global(&spec(20, 0.5), &c, 0.4, dt_weight, dt_weight, R).unwrap();
        assert_eq!((r.error, r.bound, r.holds), (0.0, 0.0, true));

        let f = catalog("abs_half").unwrap();
        let r = bound_global(&spec(50, 1.0), &f, 0.5, dt_weight, dt_weight, R).unwrap();
        assert!(r.holds, "{r:?}");

        let coarse = bound_global(&spec(10, 1.0), &f, 0.5, dt_weight, dt_weight, R).unwrap();
        let fine = bound_global(&spec(100, 1.0), &f, 0.5, dt_weight, dt_weight, R).unwrap();
        assert!(fine.bound < coarse.bound);

        assert!(matches!(
            bound_global(&spec(10, 1.0), &f, 0.0, dt_weight, dt_weight, R),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn lipschitz_bound_cases() {
        let id = catalog("lip_id").unwrap();
        let lip = LipschitzSpec::new(2f64.sqrt(), 1.0, 0.0, 1.0).unwrap();
        let r = bound_lipschitz(&spec(10, 0.0), &id, &lip, 0.5).unwrap();
        // √2 · √0.025 · √2
        assert_abs_diff_eq!(r.bound, 2.0 * 0.025f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.bound, 0.31622776601683794, epsilon = 1e-14);
        assert!(r.error <= 1e-15 && r.holds);

        let r = bound_lipschitz(&spec(2, 1.0), &id, &lip, 0.25).unwrap();
        assert_abs_diff_eq!(r.error, 0.046875, epsilon = 1e-15);
        assert!(r.holds && r.bound > r.error);

        let c = FunctionHandle::constant(1.0);
        assert!(bound_lipschitz(&spec(5, 0.2), &c, &lip, 0.3).unwrap().holds);
        assert!(bound_lipschitz(&spec(5, 0.2), &c, &lip, 0.0).is_err());
    }

    #[test]
    fn c1_bound_cases() {
        let lin = FunctionHandle::quadratic(0.3, -2.0, 0.0);
        let r = bound_c1(&spec(12, 0.0), &lin, 0.37, R).unwrap();
        assert!(r.error <= 1e-15);
        assert_eq!(r.bound, 0.0);
        assert!(r.holds);

        assert!(bound_c1(&spec(20, 0.5), &catalog("square").unwrap(), 0.3, R).unwrap().holds);
        assert!(bound_c1(&spec(100, -1.0), &catalog("exp").unwrap(), 0.7, R).unwrap().holds);
        let no_derivative = FunctionHandle::new("g", |x| x);
        assert!(matches!(bound_c1(&spec(5, 0.0), &no_derivative, 0.5, R), Err(Error::MissingDerivative { .. })));
    }

    #[test]
    fn residual_vanishes_on_quadratics() {
        let q = FunctionHandle::quadratic(0.7, -1.3, 2.9);
        for &n in &[2usize, 3, 10, 257] {
            for &l in &[-1.0, 0.0, 0.4, 1.0] {
                for k in 0..=20 {
                    let x = k as f64 / 20.0;
                    let r = voronovskaja_residual(&spec(n, l), &q, x).unwrap();
                    assert!(r.abs() <= 1e-12, "n={n} λ={l} x={x}: {r}");
                }
            }
        }
        let c = FunctionHandle::constant(-4.0);
        assert_eq!(voronovskaja_residual(&spec(9, 0.1), &c, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn other_reading_leaves_a_residual() {
        let sq = catalog("square").unwrap();
        let r = voronovskaja_residual_with(&spec(50, 0.0), &sq, 0.5, SecondOrderCoefficient::AlphaPlusOneHalf).unwrap();
        assert_abs_diff_eq!(r, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_decay() {
        let exp = catalog("exp").unwrap();
        let scaled = |n: usize| n as f64 * voronovskaja_residual(&spec(n, 1.0), &exp, 0.5).unwrap();
        assert!(scaled(1024).abs() < 0.25 * scaled(128).abs());
        for name in ["exp", "sinpi"] {
            let f = catalog(name).unwrap();
            for x in [0.25, 0.5, 0.75] {
                let seq: Vec<f64> = [128usize, 256, 512, 1024]
                    .iter()
                    .map(|&n| (n as f64 * voronovskaja_residual(&spec(n, 1.0), &f, x).unwrap()).abs())
                    .collect();
                assert!(seq.windows(2).all(|w| w[1] < w[0]), "{name} at {x}: {seq:?}");
            }
        }
        assert!(voronovskaja_rhs(&spec(128, 1.0), &exp, 0.5, R, VORONOVSKAJA_CONSTANT).unwrap() > 0.0);
    }

    #[test]
    fn limit_values() {
        let exp = catalog("exp").unwrap();
        let target = voronovskaja_target(&exp, 0.5).unwrap();
        assert_abs_diff_eq!(target, 0.25 * 0.5f64.exp() / 2.0, epsilon = 1e-15);
        let v = voronovskaja_limit(&spec(2000, 1.0), &exp, 0.5).unwrap();
        assert!((v - 0.20609).abs() <= 0.05, "{v}");

        let sq = catalog("square").unwrap();
        assert_abs_diff_eq!(voronovskaja_limit(&spec(1000, 0.0), &sq, 0.5).unwrap(), 0.25, epsilon = 1e-10);

        let id = catalog("id").unwrap();
        let a = voronovskaja_limit(&spec(100, 1.0), &id, 0.3).unwrap().abs();
        let b = voronovskaja_limit(&spec(1000, 1.0), &id, 0.3).unwrap().abs();
        assert!(b < 0.2 * a, "{a} {b}");
    }
}
