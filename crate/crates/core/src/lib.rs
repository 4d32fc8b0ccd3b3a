//! Junction-tree and cherry-vine copula modeling.
//!
//! A d-dimensional copula density that factorizes over a junction tree can
//! be written as a product of cluster copula densities divided by separator
//! copula densities. Cherry trees (all clusters of size k, all separators
//! of size k-1) stack into vine structures whose pair-copula factorization
//! this crate evaluates, truncates, samples and learns from data.
//!
//! Modules:
//! - [`graph`]: hypergraph/junction-tree/cherry-tree structures and validators
//! - [`bicop`]: parametric bivariate copula families (density, CDF,
//!   h-function, Kendall tau links, fitting)
//! - [`gaussian`]: multivariate Gaussian copula helpers (closed-form
//!   densities, partial correlations, decomposable combination)
//! - [`vine`]: cherry-vine structures, vine density evaluation, truncation,
//!   sampling, junction-tree copula models
//! - [`learn`]: pseudo-observations, dependence matrices, structure and
//!   parameter learning
//! - [`assess`]: log-likelihood, information criteria, Monte-Carlo
//!   Kullback-Leibler divergence
//! - [`io`]: JSON structure/model files and CSV data tables

pub mod assess;
pub mod bicop;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod io;
pub mod learn;
pub mod numeric;
pub mod set;
pub mod vine;

pub use error::{Error, Result};
pub use set::{VarSet, VertexSet};
