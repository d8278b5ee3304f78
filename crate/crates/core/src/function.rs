//! Real functions on `[0, 1]` with optional analytic derivatives, and the named
//! catalog used by the command-line runner.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function of one real variable, optionally carrying `f'` and `f''`.
#[derive(Clone)]
pub struct FunctionHandle {
    name: String,
    value: RealFn,
    first: Option<RealFn>,
    second: Option<RealFn>,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("name", &self.name)
            .field("first", &self.first.is_some())
            .field("second", &self.second.is_some())
            .finish()
    }
}

impl FunctionHandle {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), value: Arc::new(f), first: None, second: None }
    }

    pub fn with_first(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.first = Some(Arc::new(df));
        self
    }

    pub fn with_second(mut self, d2f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second = Some(Arc::new(d2f));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), move |_| c)
            .with_first(|_| 0.0)
            .with_second(|_| 0.0)
    }

    /// `a + b·x + c·x²`.
    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        Self::new(format!("quadratic({a},{b},{c})"), move |x| a + b * x + c * x * x)
            .with_first(move |x| b + 2.0 * c * x)
            .with_second(move |_| 2.0 * c)
    }

    /// `x^k` for a nonnegative integer power.
    pub fn monomial(k: i32) -> Self {
        let kf = k as f64;
        Self::new(format!("t^{k}"), move |x| x.powi(k))
            .with_first(move |x| if k == 0 { 0.0 } else { kf * x.powi(k - 1) })
            .with_second(move |x| if k < 2 { 0.0 } else { kf * (kf - 1.0) * x.powi(k - 2) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn has_first(&self) -> bool {
        self.first.is_some()
    }

    pub fn has_second(&self) -> bool {
        self.second.is_some()
    }

    pub fn first(&self, x: f64) -> Result<f64> {
        self.first
            .as_ref()
            .map(|d| d(x))
            .ok_or_else(|| Error::MissingDerivative { name: self.name.clone(), order: 1 })
    }

    pub fn second(&self, x: f64) -> Result<f64> {
        self.second
            .as_ref()
            .map(|d| d(x))
            .ok_or_else(|| Error::MissingDerivative { name: self.name.clone(), order: 2 })
    }

    /// `f'` as a handle of its own, carrying `f''` as its derivative when known.
    pub fn derivative(&self) -> Result<FunctionHandle> {
        let first = self
            .first
            .clone()
            .ok_or_else(|| Error::MissingDerivative { name: self.name.clone(), order: 1 })?;
        Ok(FunctionHandle {
            name: format!("{}'", self.name),
            value: first,
            first: self.second.clone(),
            second: None,
        })
    }

    /// `f''` as a handle.
    pub fn second_derivative(&self) -> Result<FunctionHandle> {
        let second = self
            .second
            .clone()
            .ok_or_else(|| Error::MissingDerivative { name: self.name.clone(), order: 2 })?;
        Ok(FunctionHandle { name: format!("{}''", self.name), value: second, first: None, second: None })
    }
}

/// Names accepted by [`catalog`].
pub const CATALOG: &[&str] =
    &["const1", "id", "square", "cube", "quart", "exp", "sinpi", "abs_half", "sqrt", "lip_id"];

/// Built-in test functions. Derivatives are attached where they exist; `sqrt`
/// carries derivatives that are infinite at 0, `abs_half` only a first
/// derivative (with value 0 at the kink).
pub fn catalog(name: &str) -> Option<FunctionHandle> {
    let named = |h: FunctionHandle| FunctionHandle { name: name.to_string(), ..h };
    let f = match name {
        "const1" => named(FunctionHandle::constant(1.0)),
        "id" | "lip_id" => named(FunctionHandle::monomial(1)),
        "square" => named(FunctionHandle::monomial(2)),
        "cube" => named(FunctionHandle::monomial(3)),
        "quart" => named(FunctionHandle::monomial(4)),
        "exp" => FunctionHandle::new(name, f64::exp).with_first(f64::exp).with_second(f64::exp),
        "sinpi" => FunctionHandle::new(name, |x| (PI * x).sin())
            .with_first(|x| PI * (PI * x).cos())
            .with_second(|x| -PI * PI * (PI * x).sin()),
        "abs_half" => FunctionHandle::new(name, |x| (x - 0.5).abs()).with_first(|x| {
            if x > 0.5 {
                1.0
            } else if x < 0.5 {
                -1.0
            } else {
                0.0
            }
        }),
        "sqrt" => FunctionHandle::new(name, f64::sqrt)
            .with_first(|x| 0.5 / x.sqrt())
            .with_second(|x| -0.25 / (x * x.sqrt())),
        _ => return None,
    };
    Some(f)
}
