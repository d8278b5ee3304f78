//! λ-Bernstein operators on `[0, 1]` and `[0, 1]²`.
//!
//! * [`basis`]: classical and λ-modified Bézier bases, plus an exact rational oracle.
//! * [`univariate`]: the operator, closed-form moments, grid errors.
//! * [`smoothness`]: grid estimators for moduli of continuity and smoothness.
//! * [`bounds`]: pointwise error bounds and Voronovskaja residuals.
//! * [`summability`]: weighted mean matrices and A-statistical limits.
//! * [`bivariate`]: tensor-product operators, bivariate moduli and checks.
//! * [`cli`]: the `lbern` experiment runner.

pub mod basis;
pub mod bivariate;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod function;
pub mod smoothness;
pub mod summability;
pub mod univariate;

pub use basis::{bernstein_basis, lambda_basis, BasisVector, Degree, ShapeParam};
pub use error::{Error, Result};
pub use function::FunctionHandle;
pub use univariate::{MomentSet, OperatorSpec, PreparedOperator};
