//! Multivariate Gaussian copula helpers: closed-form log densities,
//! partial correlations extracted from a correlation matrix, and the
//! decomposable (Markov) combination of clique marginals along a junction
//! tree. These provide the closed-form reference densities that the vine
//! factorizations are checked against, and the cluster evaluators for
//! Gaussian junction-tree copula models.

use crate::error::{Error, Result};
use crate::graph::JunctionTree;
use crate::numeric::normal::norm_quantile;
use crate::numeric::Matrix;

/// A Gaussian copula with a fixed correlation matrix, prepared for repeated
/// log-density evaluation.
#[derive(Debug, Clone)]
pub struct GaussianCopula {
    dim: usize,
    inverse: Matrix,
    log_det: f64,
}

impl GaussianCopula {
    /// Validate (symmetry, unit diagonal, positive definiteness) and
    /// precompute the inverse and log-determinant.
    pub fn new(corr: Matrix) -> Result<Self> {
        let n = corr.n();
        for i in 0..n {
            if (corr[(i, i)] - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "correlation matrix diagonal entry {} is {}",
                    i,
                    corr[(i, i)]
                )));
            }
            for j in 0..i {
                if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-10 {
                    return Err(Error::InvalidInput(
                        "correlation matrix is not symmetric".into(),
                    ));
                }
            }
        }
        let chol = corr.cholesky()?;
        let mut log_det = 0.0;
        for i in 0..n {
            log_det += 2.0 * chol[(i, i)].ln();
        }
        let inverse = corr.inverse()?;
        Ok(GaussianCopula {
            dim: n,
            inverse,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Closed-form log density
    /// `-(1/2) log det R - (1/2) z' (R^-1 - I) z` with `z_i = Phi^-1(u_i)`.
    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        let z: Vec<f64> = u
            .iter()
            .map(|&ui| norm_quantile(crate::numeric::clamp_unit(ui)))
            .collect();
        let quad = self.inverse.quad_form(&z);
        let zz: f64 = z.iter().map(|zi| zi * zi).sum();
        Ok(-0.5 * self.log_det - 0.5 * (quad - zz))
    }
}

/// Partial correlation of variables `a` and `b` (matrix indices) given the
/// index set `given`, from the precision of the corresponding submatrix.
pub fn partial_correlation(corr: &Matrix, a: usize, b: usize, given: &[usize]) -> Result<f64> {
    let mut idx = vec![a, b];
    idx.extend_from_slice(given);
    let sub = corr.submatrix(&idx);
    let omega = sub.inverse()?;
    Ok(-omega[(0, 1)] / (omega[(0, 0)] * omega[(1, 1)]).sqrt())
}

/// Combine the clique marginals of a source correlation matrix along a
/// junction tree: the precision of the combined distribution is the sum of
/// padded clique precisions minus the padded separator precisions (one per
/// tree edge). The result keeps every clique marginal of the source and is
/// Markov with respect to the tree, so its copula density factorizes
/// exactly over the tree's clusters and separators.
pub fn markov_combine(jt: &JunctionTree, source: &Matrix) -> Result<Matrix> {
    let labels = jt.vertices().labels();
    let d = labels.len();
    if source.n() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: source.n(),
        });
    }
    let pos = |v: u32| jt.vertices().index_of(v).expect("label in vertex set");

    let mut omega = Matrix::zeros(d);
    for cluster in jt.clusters() {
        let idx: Vec<usize> = cluster.iter().map(pos).collect();
        let prec = source.submatrix(&idx).inverse()?;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                omega[(i, j)] += prec[(a, b)];
            }
        }
    }
    for edge in jt.tree_edges() {
        if edge.separator.is_empty() {
            continue;
        }
        let idx: Vec<usize> = edge.separator.iter().map(pos).collect();
        let prec = source.submatrix(&idx).inverse()?;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                omega[(i, j)] -= prec[(a, b)];
            }
        }
    }
    let combined = omega.inverse()?;
    // The construction preserves unit variances up to rounding; tidy the
    // diagonal exactly.
    let mut out = Matrix::zeros(d);
    let scale: Vec<f64> = (0..d).map(|i| combined[(i, i)].sqrt()).collect();
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = combined[(i, j)] / (scale[i] * scale[j]);
        }
    }
    Ok(out)
}

/// Build the all-Gaussian vine model implied by a correlation matrix on a
/// given structure: every link (a, b | S) receives the Gaussian pair copula
/// whose parameter is the partial correlation of a and b given S under the
/// matrix. For a positive-definite matrix the resulting vine density equals
/// the closed-form Gaussian copula density of the matrix.
pub fn vine_from_correlation(
    structure: crate::vine::CherryVineStructure,
    corr: &Matrix,
) -> Result<crate::vine::VineModel> {
    use crate::bicop::{BivariateCopula, Family};
    if corr.n() != structure.d() {
        return Err(Error::DimensionMismatch {
            expected: structure.d(),
            got: corr.n(),
        });
    }
    let index = |v: u32| {
        structure
            .vertices()
            .index_of(v)
            .expect("label in structure")
    };
    let mut assignments = Vec::new();
    for label in structure.edge_labels() {
        let given: Vec<usize> = label.cond.iter().map(index).collect();
        let rho = partial_correlation(corr, index(label.a), index(label.b), &given)?;
        let copula = BivariateCopula::new(Family::Gaussian, Some(rho))?;
        assignments.push((label, copula));
    }
    crate::vine::VineModel::new(structure, assignments)
}
