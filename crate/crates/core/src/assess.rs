//! Model assessment: log-likelihood, information criteria, and Monte-Carlo
//! Kullback-Leibler divergence between copula densities.

use crate::error::{Error, Result};
use crate::gaussian::GaussianCopula;
use crate::learn::PseudoObservations;
use crate::vine::{JunctionTreeCopulaModel, VineModel};

/// Anything that evaluates a copula log density on the unit hypercube.
pub trait CopulaDensity {
    fn dim(&self) -> usize;
    fn log_density_at(&self, u: &[f64]) -> Result<f64>;
}

impl CopulaDensity for VineModel {
    fn dim(&self) -> usize {
        self.d()
    }
    fn log_density_at(&self, u: &[f64]) -> Result<f64> {
        self.log_density(u)
    }
}

impl CopulaDensity for JunctionTreeCopulaModel {
    fn dim(&self) -> usize {
        JunctionTreeCopulaModel::dim(self)
    }
    fn log_density_at(&self, u: &[f64]) -> Result<f64> {
        self.log_density(u)
    }
}

impl CopulaDensity for GaussianCopula {
    fn dim(&self) -> usize {
        GaussianCopula::dim(self)
    }
    fn log_density_at(&self, u: &[f64]) -> Result<f64> {
        self.log_density(u)
    }
}

/// Total log density of the data under the model.
pub fn log_likelihood(m: &VineModel, po: &PseudoObservations) -> Result<f64> {
    if po.d() != m.d() {
        return Err(Error::DimensionMismatch {
            expected: m.d(),
            got: po.d(),
        });
    }
    let mut total = 0.0;
    for (idx, row) in po.rows().enumerate() {
        let ld = m.log_density(row).map_err(|e| Error::NonFinite {
            context: format!("log likelihood of row {idx}: {e}"),
        })?;
        total += ld;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite {
            context: "log likelihood".into(),
        });
    }
    Ok(total)
}

/// AIC/BIC for a fitted vine; the parameter count sums the parameters of
/// the non-independence pair copulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub log_likelihood: f64,
}

pub fn information_criteria(m: &VineModel, po: &PseudoObservations) -> Result<InformationCriteria> {
    let ll = log_likelihood(m, po)?;
    let n_params: usize = m
        .pair_copulas()
        .map(|(_, c)| c.family().parameter_count())
        .sum();
    let n = po.n() as f64;
    Ok(InformationCriteria {
        aic: -2.0 * ll + 2.0 * n_params as f64,
        bic: -2.0 * ll + n_params as f64 * n.ln(),
        n_params,
        log_likelihood: ll,
    })
}

/// A Monte-Carlo Kullback-Leibler estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Estimate `KL(p || q) = E_p[log p - log q]` by sampling from `p`.
///
/// Deterministic for a given seed. A point where `q`'s log density is not
/// finite (its density vanishes under p's support) is reported as an error
/// rather than clamped, so structural mismatches surface loudly.
pub fn kl_divergence_mc<Q: CopulaDensity + ?Sized>(
    p: &VineModel,
    q: &Q,
    n: usize,
    seed: u64,
) -> Result<DivergenceEstimate> {
    if n < 100 {
        return Err(Error::TooFewObservations {
            required: 100,
            got: n,
        });
    }
    if p.d() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.d(),
            got: q.dim(),
        });
    }
    let samples = p.sample(n, seed)?;
    let mut terms = Vec::with_capacity(n);
    for (idx, row) in samples.iter().enumerate() {
        let lp = p.log_density(row)?;
        let lq = q.log_density_at(row).map_err(|e| Error::NonFinite {
            context: format!("q density at sample {idx}: {e}"),
        })?;
        if !lq.is_finite() {
            return Err(Error::NonFinite {
                context: format!("q density at sample {idx} is not finite"),
            });
        }
        terms.push(lp - lq);
    }
    let mean = terms.iter().sum::<f64>() / n as f64;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Ok(DivergenceEstimate {
        value: mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
        seed,
    })
}
