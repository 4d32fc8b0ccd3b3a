//! Greedy cherry-tree growth and truncated-vine fitting.
//!
//! Levels are fitted bottom-up. The first tree maximizes the summed
//! absolute Kendall tau; each higher tree's clusters are the unions of
//! linked clusters of the level below, and its links are chosen by a
//! maximum-weight spanning tree over pairs of lower links that share an
//! endpoint cluster, weighted by the absolute empirical tau of the
//! h-transformed residual pair the link would condition on. Ties break
//! lexicographically, so learned structures are reproducible.

use crate::bicop::{fit_bicop, BivariateCopula, Family, FitMethod, UnitPair};
use crate::error::{Error, Result};
use crate::graph::{expand_cherry_tree, CherryTree, JunctionTree};
use crate::learn::{
    empirical_tau_matrix, fit_first_tree, independence_filter, kendall_tau, PseudoObservations,
};
use crate::numeric::clamp_unit;
use crate::set::{VarSet, VertexSet};
use crate::vine::{build_cherry_vine, EdgeLabel, VineModel};

/// Options controlling per-link copula fitting.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub method: FitMethod,
    /// When set, links whose residual pair passes the asymptotic
    /// independence test at this level are assigned the independence copula
    /// without fitting.
    pub independence_alpha: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            method: FitMethod::TauInversion,
            independence_alpha: None,
        }
    }
}

struct FitLink {
    a: u32,
    b: u32,
    cond: VarSet,
    a_cluster: usize,
    b_cluster: usize,
    copula: BivariateCopula,
    /// F_{a | cond + {b}} per observation.
    resid_a: Vec<f64>,
    /// F_{b | cond + {a}} per observation.
    resid_b: Vec<f64>,
}

impl FitLink {
    fn constraint(&self) -> VarSet {
        self.cond.with(self.a).with(self.b)
    }
}

struct LevelState {
    clusters: Vec<VarSet>,
    links: Vec<FitLink>,
    tree: Option<CherryTree>,
}

/// Sequential per-level fitter. Construction fits the first tree; each
/// [`VineFitter::grow_level`] call adds the next cherry tree.
pub struct VineFitter {
    families: Vec<Family>,
    options: FitOptions,
    vertices: VertexSet,
    levels: Vec<LevelState>,
}

impl VineFitter {
    /// Fit the dependence-weighted first tree and its pair copulas.
    pub fn new(
        po: &PseudoObservations,
        families: &[Family],
        options: FitOptions,
    ) -> Result<Self> {
        let dm = empirical_tau_matrix(po)?;
        let edges = fit_first_tree(&dm);
        Self::with_first_tree(po, &edges, families, options)
    }

    /// Start from a caller-supplied first tree instead of the
    /// maximum-dependence one.
    pub fn with_first_tree(
        po: &PseudoObservations,
        edges: &[(u32, u32)],
        families: &[Family],
        options: FitOptions,
    ) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::EmptyFamilyPool);
        }
        let d = po.d();
        if d < 2 {
            return Err(Error::InvalidInput("need at least two variables".into()));
        }
        if edges.len() != d - 1 {
            return Err(Error::Structure(format!(
                "first tree has {} edges, expected {}",
                edges.len(),
                d - 1
            )));
        }
        let vertices = VertexSet::standard(d);

        let mut fitter = VineFitter {
            families: families.to_vec(),
            options,
            vertices,
            levels: Vec::new(),
        };

        let clusters: Vec<VarSet> = (1..=d as u32).map(VarSet::singleton).collect();
        let mut links = Vec::with_capacity(edges.len());
        for &(x0, y0) in edges {
            let (a, b) = (x0.min(y0), x0.max(y0));
            if a == 0 || b as usize > d || a == b {
                return Err(Error::Structure(format!("invalid first-tree edge ({x0},{y0})")));
            }
            let x = po.column(a as usize - 1);
            let y = po.column(b as usize - 1);
            let copula = fitter.fit_link_copula(&x, &y)?;
            let (resid_a, resid_b) = residuals(&copula, &x, &y);
            links.push(FitLink {
                a,
                b,
                cond: VarSet::new(),
                a_cluster: a as usize - 1,
                b_cluster: b as usize - 1,
                copula,
                resid_a,
                resid_b,
            });
        }
        fitter.levels.push(LevelState {
            clusters,
            links,
            tree: None,
        });
        Ok(fitter)
    }

    /// Highest fitted level (1 after construction).
    pub fn level(&self) -> usize {
        self.levels.len()
    }

    pub fn first_tree(&self) -> Vec<(u32, u32)> {
        self.levels[0].links.iter().map(|l| (l.a, l.b)).collect()
    }

    /// The fitted cherry tree of order `k` (2 <= k <= current level).
    pub fn tree(&self, k: usize) -> Option<&CherryTree> {
        if k < 2 || k > self.levels.len() {
            return None;
        }
        self.levels[k - 1].tree.as_ref()
    }

    /// Grow the next cherry tree greedily and fit its pair copulas.
    ///
    /// Clusters of the new tree are the unions of linked clusters of the
    /// previous level; links are a maximum spanning tree over
    /// endpoint-sharing pairs, weighted by the absolute Kendall tau of the
    /// conditioned residual pair.
    pub fn grow_level(&mut self) -> Result<&CherryTree> {
        let k = self.levels.len() + 1;
        let d = self.vertices.len();
        if k > d - 1 {
            return Err(Error::LevelOutOfRange { level: k, max: d - 1 });
        }
        let prev = self.levels.last().expect("at least one level");
        let m = prev.links.len();
        debug_assert!(m >= 2);

        // New clusters: one per previous-level link.
        let new_clusters: Vec<VarSet> = prev.links.iter().map(|l| l.constraint()).collect();
        {
            let mut sorted = new_clusters.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != m {
                return Err(Error::Structure(
                    "two links of the previous level span the same cluster".into(),
                ));
            }
        }

        // Candidate links: pairs of previous links sharing an endpoint
        // cluster. The shared cluster is the separator; each side
        // contributes its conditioned vertex away from it, whose residual
        // column is already computed.
        struct Candidate {
            i: usize,
            j: usize,
            weight: f64,
        }
        fn away(link: &FitLink, shared: usize) -> (u32, &Vec<f64>) {
            if link.a_cluster == shared {
                (link.b, &link.resid_b)
            } else {
                (link.a, &link.resid_a)
            }
        }
        let mut candidates = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                let li = &prev.links[i];
                let lj = &prev.links[j];
                let shared = [li.a_cluster, li.b_cluster]
                    .into_iter()
                    .find(|c| *c == lj.a_cluster || *c == lj.b_cluster);
                let Some(shared) = shared else { continue };
                let (_, ri) = away(li, shared);
                let (_, rj) = away(lj, shared);
                let tau = kendall_tau(ri, rj)?;
                candidates.push(Candidate {
                    i,
                    j,
                    weight: tau.abs(),
                });
            }
        }
        candidates.sort_by(|x, y| {
            y.weight
                .total_cmp(&x.weight)
                .then(x.i.cmp(&y.i))
                .then(x.j.cmp(&y.j))
        });

        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            r
        }
        let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(m - 1);
        for c in &candidates {
            let (ri, rj) = (find(&mut parent, c.i), find(&mut parent, c.j));
            if ri != rj {
                parent[ri] = rj;
                chosen.push((c.i, c.j));
                if chosen.len() == m - 1 {
                    break;
                }
            }
        }
        if chosen.len() != m - 1 {
            return Err(Error::Structure(
                "previous level's links do not connect into a cherry tree".into(),
            ));
        }

        let tree = CherryTree::new(
            k,
            JunctionTree::new(self.vertices.clone(), new_clusters.clone(), chosen.clone())?,
        )?;

        // Fit the new links.
        let mut links = Vec::with_capacity(m - 1);
        for &(i, j) in &chosen {
            let li = &prev.links[i];
            let lj = &prev.links[j];
            let shared = [li.a_cluster, li.b_cluster]
                .into_iter()
                .find(|c| *c == lj.a_cluster || *c == lj.b_cluster)
                .expect("chosen candidates share a cluster");
            let cond = prev.clusters[shared].clone();
            let (vi, ri) = away(li, shared);
            let (vj, rj) = away(lj, shared);
            // Normalize the label so a < b; cluster index a_cluster refers
            // to the new cluster spanning {a} + cond.
            let (a, b, xa, xb, ca, cb) = if vi < vj {
                (vi, vj, ri.clone(), rj.clone(), i, j)
            } else {
                (vj, vi, rj.clone(), ri.clone(), j, i)
            };
            let copula = self.fit_link_copula(&xa, &xb)?;
            let (resid_a, resid_b) = residuals(&copula, &xa, &xb);
            links.push(FitLink {
                a,
                b,
                cond,
                a_cluster: ca,
                b_cluster: cb,
                copula,
                resid_a,
                resid_b,
            });
        }
        self.levels.push(LevelState {
            clusters: new_clusters,
            links,
            tree: Some(tree),
        });
        Ok(self.levels.last().unwrap().tree.as_ref().unwrap())
    }

    /// Select the best family from the pool for one residual pair. Ranks by
    /// fitted log-likelihood; exact ties favor independence, then the
    /// family with fewer parameters in pool order. Families whose
    /// attainable tau range excludes the empirical tau are skipped; when
    /// nothing fits, the link falls back to independence.
    fn fit_link_copula(&self, x: &[f64], y: &[f64]) -> Result<BivariateCopula> {
        if let Some(alpha) = self.options.independence_alpha {
            if independence_filter(x, y, alpha)? {
                return Ok(BivariateCopula::Independence);
            }
        }
        let pairs: Vec<(f64, f64)> = x
            .iter()
            .zip(y)
            .map(|(&u, &v)| (clamp_unit(u), clamp_unit(v)))
            .collect();
        let loglik = |c: &BivariateCopula| -> f64 {
            pairs
                .iter()
                .map(|&(u, v)| c.log_density(UnitPair::new(u, v)))
                .sum()
        };
        let rank = |f: Family| match f {
            Family::Independence => 0usize,
            Family::Gaussian => 1,
            Family::Clayton => 2,
            Family::Gumbel => 3,
            Family::Frank => 4,
        };
        let mut best: Option<(f64, usize, BivariateCopula)> = None;
        for &family in &self.families {
            let fitted = if family == Family::Independence {
                BivariateCopula::Independence
            } else {
                match fit_bicop(&pairs, family, self.options.method) {
                    Ok(c) => c,
                    Err(Error::UnattainableTau { .. }) => continue,
                    Err(e) => return Err(e),
                }
            };
            let ll = loglik(&fitted);
            if !ll.is_finite() {
                continue;
            }
            let r = rank(family);
            let better = match &best {
                None => true,
                Some((bll, brank, _)) => ll > *bll + 1e-12 || ((ll - bll).abs() <= 1e-12 && r < *brank),
            };
            if better {
                best = Some((ll, r, fitted));
            }
        }
        Ok(best.map(|(_, _, c)| c).unwrap_or(BivariateCopula::Independence))
    }

    /// Assemble the fitted levels into a vine model truncated at `k`:
    /// levels above the fitted ones are completed structurally by cherry
    /// tree expansion and carry independence copulas.
    pub fn into_model(self, k: usize) -> Result<VineModel> {
        let d = self.vertices.len();
        let fitted_levels = self.levels.len();
        debug_assert!(fitted_levels >= k.min(d - 1));

        let mut trees: Vec<CherryTree> = Vec::with_capacity(d.saturating_sub(2));
        for level in &self.levels[1..] {
            trees.push(level.tree.clone().expect("levels beyond the first have trees"));
        }
        if d >= 3 && trees.is_empty() {
            // Only the first tree was fitted; derive the second tree
            // structurally (all of its copulas will be independence).
            let clusters: Vec<VarSet> = self.levels[0]
                .links
                .iter()
                .map(|l| l.constraint())
                .collect();
            let jt = crate::graph::build_junction_tree(&self.vertices, &clusters)?;
            trees.push(CherryTree::new(2, jt)?);
        }
        while trees.len() < d - 2 {
            let next = expand_cherry_tree(trees.last().unwrap())?;
            trees.push(next);
        }

        let first_tree: Vec<(u32, u32)> = self.levels[0].links.iter().map(|l| (l.a, l.b)).collect();
        let structure = build_cherry_vine(self.vertices.clone(), first_tree, trees)?;

        let mut assignments: Vec<(EdgeLabel, BivariateCopula)> = Vec::new();
        for level in &self.levels {
            for link in &level.links {
                if link.cond.len() >= k {
                    continue;
                }
                assignments.push((
                    EdgeLabel {
                        a: link.a,
                        b: link.b,
                        cond: link.cond.clone(),
                    },
                    link.copula,
                ));
            }
        }
        let mut fitted: std::collections::BTreeSet<EdgeLabel> =
            assignments.iter().map(|(l, _)| l.clone()).collect();
        for label in structure.edge_labels() {
            if !fitted.remove(&label) {
                assignments.push((label, BivariateCopula::Independence));
            }
        }
        VineModel::new(structure, assignments)
    }
}

fn residuals(copula: &BivariateCopula, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let resid_a = x
        .iter()
        .zip(y)
        .map(|(&u, &v)| copula.h_function(u, v))
        .collect();
    let resid_b = x
        .iter()
        .zip(y)
        .map(|(&u, &v)| copula.h_function(v, u))
        .collect();
    (resid_a, resid_b)
}

/// Grow the k-th order cherry tree greedily from the data: fits levels
/// 1..k-1 first (they provide the conditioned residuals) and returns the
/// k-th tree.
pub fn greedy_cherry_tree(
    po: &PseudoObservations,
    k: usize,
    families: &[Family],
    options: FitOptions,
) -> Result<CherryTree> {
    if k < 2 || k > po.d() - 1 {
        return Err(Error::LevelOutOfRange {
            level: k,
            max: po.d() - 1,
        });
    }
    let mut fitter = VineFitter::new(po, families, options)?;
    while fitter.level() < k {
        fitter.grow_level()?;
    }
    Ok(fitter.tree(k).unwrap().clone())
}

/// Fit a vine truncated at level `k`: the first tree by maximum dependence,
/// trees 2..k by greedy cherry growth with per-link family selection, all
/// links with conditioning sets of size >= k set to independence, and the
/// remaining tree levels completed structurally.
pub fn fit_truncated_vine(
    po: &PseudoObservations,
    k: usize,
    families: &[Family],
    options: FitOptions,
) -> Result<VineModel> {
    let d = po.d();
    if d < 2 {
        return Err(Error::InvalidInput("need at least two variables".into()));
    }
    if k < 1 || k > d - 1 {
        return Err(Error::LevelOutOfRange { level: k, max: d - 1 });
    }
    let mut fitter = VineFitter::new(po, families, options)?;
    while fitter.level() < k {
        fitter.grow_level()?;
    }
    fitter.into_model(k)
}
