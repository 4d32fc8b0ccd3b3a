//! Junction-tree copula models: a junction tree whose clusters and
//! separators carry copula density evaluators, combined as
//! `sum_K log c_K - sum_S (nu_S - 1) log c_S`. Truncated vines convert into
//! this form; Gaussian cluster models provide closed-form instances.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gaussian::GaussianCopula;
use crate::graph::{CherryTree, JunctionTree};
use crate::numeric::Matrix;
use crate::set::VarSet;
use crate::vine::VineModel;

/// A copula density on a subset of the variables, evaluated at the full
/// d-dimensional point (the evaluator reads only its own coordinates).
/// Returns a plain density value; nonpositive or non-finite values are
/// reported by [`JunctionTreeCopulaModel::log_density`].
pub type DensityEvaluator = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub struct JunctionTreeCopulaModel {
    tree: JunctionTree,
    dim: usize,
    cluster_evals: Vec<DensityEvaluator>,
    /// One evaluator per distinct separator set, with its multiplicity nu_S.
    separator_evals: Vec<(VarSet, usize, DensityEvaluator)>,
}

impl JunctionTreeCopulaModel {
    /// Assemble from a junction tree and per-cluster/per-separator
    /// evaluators (cluster evaluators parallel to `tree.clusters()`).
    pub fn new(
        tree: JunctionTree,
        cluster_evals: Vec<DensityEvaluator>,
        separator_evals: Vec<(VarSet, usize, DensityEvaluator)>,
    ) -> Result<Self> {
        if cluster_evals.len() != tree.clusters().len() {
            return Err(Error::DimensionMismatch {
                expected: tree.clusters().len(),
                got: cluster_evals.len(),
            });
        }
        for (sep, _) in tree.separator_multiplicities() {
            if !sep.is_empty() && !separator_evals.iter().any(|(s, _, _)| s == sep) {
                return Err(Error::Structure(format!(
                    "separator {sep} has no evaluator"
                )));
            }
        }
        let dim = tree.vertices().len();
        Ok(JunctionTreeCopulaModel {
            tree,
            dim,
            cluster_evals,
            separator_evals,
        })
    }

    pub fn tree(&self) -> &JunctionTree {
        &self.tree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `sum_K log c_K(u_K) - sum_S (nu_S - 1) log c_S(u_S)` over clusters
    /// and distinct separators.
    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        let mut total = 0.0;
        for (idx, eval) in self.cluster_evals.iter().enumerate() {
            let value = eval(u);
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonpositiveDensity {
                    context: format!("cluster {}", self.tree.clusters()[idx]),
                    value,
                });
            }
            total += value.ln();
        }
        for (sep, nu, eval) in &self.separator_evals {
            if *nu <= 1 {
                continue;
            }
            let value = eval(u);
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonpositiveDensity {
                    context: format!("separator {sep}"),
                    value,
                });
            }
            total -= (*nu as f64 - 1.0) * value.ln();
        }
        Ok(total)
    }

    /// Evaluate the density attached to cluster `idx` at a full-dimension
    /// point.
    pub fn cluster_density(&self, idx: usize, u: &[f64]) -> f64 {
        (self.cluster_evals[idx])(u)
    }

    /// Evaluate the density attached to a separator set, if present.
    pub fn separator_density(&self, sep: &VarSet, u: &[f64]) -> Option<f64> {
        self.separator_evals
            .iter()
            .find(|(s, _, _)| s == sep)
            .map(|(_, _, eval)| eval(u))
    }

    /// Gaussian junction-tree copula: every cluster and separator carries
    /// the closed-form Gaussian copula density of the corresponding
    /// submatrix of `corr`. For the factorization to integrate to one the
    /// correlation matrix should be Markov with respect to the tree (see
    /// [`crate::gaussian::markov_combine`]).
    pub fn gaussian(tree: JunctionTree, corr: &Matrix) -> Result<Self> {
        let d = tree.vertices().len();
        if corr.n() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: corr.n(),
            });
        }
        let make = |set: &VarSet| -> Result<DensityEvaluator> {
            let coords: Vec<usize> = set
                .iter()
                .map(|v| tree.vertices().index_of(v).expect("vertex in tree"))
                .collect();
            let gc = GaussianCopula::new(corr.submatrix(&coords))?;
            Ok(Box::new(move |u: &[f64]| {
                let sub: Vec<f64> = coords.iter().map(|&c| u[c]).collect();
                match gc.log_density(&sub) {
                    Ok(ld) => ld.exp(),
                    Err(_) => f64::NAN,
                }
            }))
        };
        let mut cluster_evals = Vec::with_capacity(tree.clusters().len());
        for cluster in tree.clusters() {
            cluster_evals.push(make(cluster)?);
        }
        let mut separator_evals = Vec::new();
        for (sep, nu) in tree.separator_multiplicities() {
            if sep.is_empty() {
                continue;
            }
            let eval = if sep.len() == 1 {
                Box::new(|_: &[f64]| 1.0) as DensityEvaluator
            } else {
                make(sep)?
            };
            separator_evals.push((sep.clone(), *nu, eval));
        }
        JunctionTreeCopulaModel::new(tree, cluster_evals, separator_evals)
    }
}

impl std::fmt::Debug for JunctionTreeCopulaModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JunctionTreeCopulaModel")
            .field("tree", &self.tree)
            .field("clusters", &self.cluster_evals.len())
            .field("separators", &self.separator_evals.len())
            .finish()
    }
}

impl VineModel {
    /// Express a vine truncated at level `k` as its (k+1)-th order
    /// cherry-tree copula: clusters are those of tree T_{k+1} of the
    /// structure, each cluster evaluator is the sub-vine density restricted
    /// to the cluster's variables, and each separator evaluator is the
    /// sub-vine density on the separator (a cluster of T_k). Truncation at
    /// level `k` is applied first, so the result's log density agrees with
    /// the truncated vine's pointwise.
    pub fn to_cherry_tree_copula(&self, k: usize) -> Result<JunctionTreeCopulaModel> {
        let d = self.d();
        if k < 1 || k > d - 1 {
            return Err(Error::LevelOutOfRange { level: k, max: d - 1 });
        }
        let truncated = Arc::new(self.truncate(k)?);
        let structure = truncated.structure();

        if k == d - 1 {
            // Single cluster covering all variables; the evaluator is the
            // full vine density.
            let tree = JunctionTree::new(
                structure.vertices().clone(),
                vec![structure.vertices().as_varset()],
                vec![],
            )?;
            let model = Arc::clone(&truncated);
            let eval: DensityEvaluator = Box::new(move |u: &[f64]| {
                let mut memo = model.new_memo();
                match model.log_density_with_memo(u, &mut memo) {
                    Ok(ld) => ld.exp(),
                    Err(_) => f64::NAN,
                }
            });
            return JunctionTreeCopulaModel::new(tree, vec![eval], vec![]);
        }

        // T_{k+1} of the structure: trees()[k-1] (trees() starts at order 2).
        let target: &CherryTree = &structure.trees()[k - 1];
        let tree = target.base().clone();

        let sub_vine_eval = |scope: &VarSet| -> Result<DensityEvaluator> {
            let ids = truncated.links_within(scope);
            let expected = scope.len() * (scope.len() - 1) / 2;
            if ids.len() != expected {
                return Err(Error::Structure(format!(
                    "variables {scope} do not span a sub-vine of the structure ({} links, expected {expected})",
                    ids.len()
                )));
            }
            let model = Arc::clone(&truncated);
            Ok(Box::new(move |u: &[f64]| {
                let mut memo = model.new_memo();
                match model.partial_log_density(&ids, u, &mut memo) {
                    Ok(ld) => ld.exp(),
                    Err(_) => f64::NAN,
                }
            }))
        };

        let mut cluster_evals = Vec::with_capacity(tree.clusters().len());
        for cluster in tree.clusters() {
            cluster_evals.push(sub_vine_eval(cluster)?);
        }
        let mut separator_evals = Vec::new();
        for (sep, nu) in tree.separator_multiplicities() {
            let eval = if sep.len() <= 1 {
                Box::new(|_: &[f64]| 1.0) as DensityEvaluator
            } else {
                sub_vine_eval(sep)?
            };
            separator_evals.push((sep.clone(), *nu, eval));
        }
        JunctionTreeCopulaModel::new(tree, cluster_evals, separator_evals)
    }
}
