use thiserror::Error;

/// Errors raised by operator construction, evaluation and the estimators built on them.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("degree must be at least {min}, but was {n}")]
    InvalidDegree { n: usize, min: usize },

    #[error("shape parameter must lie in [-1, 1], but was {0}")]
    ShapeOutOfRange(f64),

    #[error("evaluation point {0} lies outside [0, 1]")]
    PointOutOfDomain(f64),

    #[error("closed-form moments exist only for orders 0..=4, requested {0}")]
    UnsupportedMomentOrder(usize),

    #[error("evaluation grid is empty")]
    EmptyGrid,

    #[error("modulus step must be positive and finite, but was {0}")]
    NonPositiveDelta(f64),

    #[error("modulus resolution must be at least {min}, but was {got}")]
    ResolutionTooSmall { got: usize, min: usize },

    #[error("step-weight function is negative ({value}) at x = {x}")]
    NegativeStepWeight { x: f64, value: f64 },

    #[error("{what} vanishes at x = {x}; the bound is singular there")]
    Singular { what: &'static str, x: f64 },

    #[error("function `{name}` has no derivative of order {order}")]
    MissingDerivative { name: String, order: u8 },

    #[error("invalid Lipschitz parameters: {0}")]
    InvalidLipschitz(String),

    #[error("exact oracle supports degrees up to {max}, requested {n}")]
    ExactDegreeLimit { n: usize, max: usize },

    #[error("ladder must be nonempty and strictly increasing")]
    InvalidLadder,

    #[error("epsilon ladder must be nonempty and positive")]
    InvalidEpsilons,

    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),

    #[error("no closed-form bivariate moment for `{0}`; valid: 1, s, t, s2, t2")]
    UnsupportedMonomial(String),
}

pub type Result<T> = std::result::Result<T, Error>;
