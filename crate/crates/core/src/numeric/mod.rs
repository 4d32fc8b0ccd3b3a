//! Shared numerical primitives: Gauss-Legendre quadrature, standard normal
//! functions, the bivariate normal CDF, and a small dense-matrix helper.

pub mod matrix;
pub mod normal;
pub mod quad;

pub use matrix::Matrix;

/// Evaluation-domain clamp applied to copula arguments. Inputs are pulled
/// into `[CLAMP_EPS, 1 - CLAMP_EPS]` before any transform so that quantile
/// functions stay finite.
pub const CLAMP_EPS: f64 = 1e-10;

/// Clamp a value into the open unit interval used for evaluation.
pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}
