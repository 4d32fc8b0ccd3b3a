//! Cherry-vine structures and vine copula models.
//!
//! A cherry-vine structure is a stacked sequence of trees: a spanning tree
//! T_1 on the variables, then cherry trees T_2..T_{d-1} where the clusters
//! of T_2 are the edges of T_1 and every cluster of T_k is the union of two
//! linked clusters of T_{k-1}. Each linked cluster pair carries an edge
//! label (a, b | S) with S the separator and a, b the single vertices the
//! two clusters add over it. Assigning a bivariate copula to every label
//! yields a vine copula model whose density is the product of the pair
//! copula densities evaluated at conditional CDFs; those are computed by
//! recursive h-function steps dictated by the structure.

mod jtree;
mod sample;

pub use jtree::{DensityEvaluator, JunctionTreeCopulaModel};

use std::fmt;

use crate::bicop::{BivariateCopula, UnitPair};
use crate::error::{Error, Result};
use crate::graph::{CherryTree, JunctionTree};
use crate::numeric::clamp_unit;
use crate::set::{VarSet, VertexSet};

/// The label of one vine link: conditioned pair (a, b) with a < b and
/// conditioning set S.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeLabel {
    pub a: u32,
    pub b: u32,
    pub cond: VarSet,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cond.is_empty() {
            write!(f, "({},{})", self.a, self.b)
        } else {
            write!(f, "({},{}|{})", self.a, self.b, self.cond)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    A,
    B,
}

impl Side {
    fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Pointer from a link to the previous-level link that computes one of its
/// conditional-CDF arguments, together with the side of that parent link
/// the target variable sits on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ParentRef {
    pub link: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Link {
    pub level: usize,
    pub a: u32,
    pub b: u32,
    pub cond: VarSet,
    pub a_parent: Option<ParentRef>,
    pub b_parent: Option<ParentRef>,
}

impl Link {
    pub fn label(&self) -> EdgeLabel {
        EdgeLabel {
            a: self.a,
            b: self.b,
            cond: self.cond.clone(),
        }
    }

    pub fn constraint(&self) -> VarSet {
        self.cond.with(self.a).with(self.b)
    }
}

/// A validated cherry-vine structure: the tree sequence plus the flattened,
/// recursion-ready link list.
#[derive(Debug, Clone, PartialEq)]
pub struct CherryVineStructure {
    vertices: VertexSet,
    first_tree: Vec<(u32, u32)>,
    trees: Vec<CherryTree>,
    links: Vec<Link>,
    levels: Vec<Vec<usize>>,
}

impl CherryVineStructure {
    pub fn d(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    /// Edges of the first tree, smaller label first, sorted.
    pub fn first_tree(&self) -> &[(u32, u32)] {
        &self.first_tree
    }

    /// The cherry trees T_2..T_{d-1} (empty for d = 2).
    pub fn trees(&self) -> &[CherryTree] {
        &self.trees
    }

    /// All edge labels, level by level.
    pub fn edge_labels(&self) -> Vec<EdgeLabel> {
        self.links.iter().map(|l| l.label()).collect()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub(crate) fn links(&self) -> &[Link] {
        &self.links
    }

    pub(crate) fn level_links(&self, level: usize) -> &[usize] {
        &self.levels[level - 1]
    }

    /// Index of the vertex in evaluation points.
    pub(crate) fn coord(&self, v: u32) -> usize {
        self.vertices.index_of(v).expect("vertex label in structure")
    }

    /// The D-vine (path) structure on 1..=d.
    pub fn dvine(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput("need d >= 2".into()));
        }
        let vertices = VertexSet::standard(d);
        let first: Vec<(u32, u32)> = (1..d as u32).map(|i| (i, i + 1)).collect();
        let mut trees = Vec::new();
        for k in 2..d {
            let clusters: Vec<VarSet> = (1..=(d - k + 1) as u32)
                .map(|i| (i..i + k as u32).collect())
                .collect();
            let edges: Vec<(usize, usize)> = (0..clusters.len() - 1).map(|t| (t, t + 1)).collect();
            let jt = JunctionTree::new(vertices.clone(), clusters, edges)?;
            trees.push(CherryTree::new(k, jt)?);
        }
        build_cherry_vine(vertices, first, trees)
    }

    /// The C-vine (star) structure on 1..=d with root order 1, 2, ...
    pub fn cvine(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput("need d >= 2".into()));
        }
        let vertices = VertexSet::standard(d);
        let first: Vec<(u32, u32)> = (2..=d as u32).map(|j| (1, j)).collect();
        let mut trees = Vec::new();
        for k in 2..d {
            let root: VarSet = (1..k as u32).collect();
            let clusters: Vec<VarSet> = (k as u32..=d as u32).map(|j| root.with(j)).collect();
            let edges: Vec<(usize, usize)> = (1..clusters.len()).map(|t| (0, t)).collect();
            let jt = JunctionTree::new(vertices.clone(), clusters, edges)?;
            trees.push(CherryTree::new(k, jt)?);
        }
        build_cherry_vine(vertices, first, trees)
    }
}

/// Assemble and validate a cherry-vine structure from a first tree and the
/// cherry trees T_2..T_{d-1}.
///
/// Validates the stacking conditions: T_2's clusters are exactly T_1's
/// edges; every cluster of T_k is the union of two linked clusters of
/// T_{k-1}; tree k has d-k+1 clusters. Edge labels (a, b | S) are computed
/// for every linked cluster pair, and each label's conditional-CDF
/// recursion is resolved against the previous level where possible
/// (structures where a pivot is missing still build, but evaluation
/// operations report them as not realizable).
pub fn build_cherry_vine(
    vertices: VertexSet,
    first_tree: Vec<(u32, u32)>,
    trees: Vec<CherryTree>,
) -> Result<CherryVineStructure> {
    let d = vertices.len();
    if d < 2 {
        return Err(Error::InvalidInput("need at least 2 vertices".into()));
    }
    if first_tree.len() != d - 1 {
        return Err(Error::Structure(format!(
            "first tree has {} edges, expected {}",
            first_tree.len(),
            d - 1
        )));
    }
    // T_1 must be a spanning tree.
    let mut normalized: Vec<(u32, u32)> = Vec::with_capacity(d - 1);
    for &(x, y) in &first_tree {
        if x == y || !vertices.contains(x) || !vertices.contains(y) {
            return Err(Error::Structure(format!("invalid first-tree edge ({x},{y})")));
        }
        normalized.push((x.min(y), x.max(y)));
    }
    normalized.sort_unstable();
    normalized.dedup();
    if normalized.len() != d - 1 {
        return Err(Error::Structure("first tree has duplicate edges".into()));
    }
    {
        let mut parent: std::collections::HashMap<u32, u32> =
            vertices.labels().iter().map(|&v| (v, v)).collect();
        fn find(parent: &mut std::collections::HashMap<u32, u32>, x: u32) -> u32 {
            let mut r = x;
            while parent[&r] != r {
                r = parent[&r];
            }
            r
        }
        for &(x, y) in &normalized {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx == ry {
                return Err(Error::Structure("first tree contains a cycle".into()));
            }
            parent.insert(rx, ry);
        }
    }

    if trees.len() != d.saturating_sub(2) {
        return Err(Error::Structure(format!(
            "expected {} cherry trees above the first tree, got {}",
            d.saturating_sub(2),
            trees.len()
        )));
    }
    for (i, tree) in trees.iter().enumerate() {
        let k = i + 2;
        if tree.order() != k {
            return Err(Error::Structure(format!(
                "tree at position {i} has order {}, expected {k}",
                tree.order()
            )));
        }
        if tree.base().vertices() != &vertices {
            return Err(Error::Structure(format!(
                "tree of order {k} is defined on a different vertex set"
            )));
        }
        if tree.clusters().len() != d - k + 1 {
            return Err(Error::Structure(format!(
                "tree of order {k} has {} clusters, expected {}",
                tree.clusters().len(),
                d - k + 1
            )));
        }
    }

    // Def 4.1 stacking: T_2 clusters = T_1 edges.
    if d >= 3 {
        let mut t2: Vec<VarSet> = trees[0].clusters().to_vec();
        t2.sort();
        let mut t1: Vec<VarSet> = normalized
            .iter()
            .map(|&(x, y)| VarSet::from_slice(&[x, y]))
            .collect();
        t1.sort();
        if t1 != t2 {
            return Err(Error::Structure(
                "clusters of the second tree do not equal the edges of the first tree".into(),
            ));
        }
    }
    // Every T_k cluster is the union of two linked T_{k-1} clusters.
    for i in 1..trees.len() {
        let prev = &trees[i - 1];
        let unions: Vec<VarSet> = prev
            .tree_edges()
            .iter()
            .map(|e| prev.clusters()[e.i].union(&prev.clusters()[e.j]))
            .collect();
        for cluster in trees[i].clusters() {
            if !unions.iter().any(|u| u == cluster) {
                return Err(Error::Structure(format!(
                    "cluster {cluster} of tree {} is not a union of two linked clusters of the previous tree",
                    i + 2
                )));
            }
        }
    }

    // Flatten into links, level by level, sorted by conditioned pair.
    let mut links: Vec<Link> = Vec::with_capacity(d * (d - 1) / 2);
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(d - 1);

    let mut level1: Vec<Link> = normalized
        .iter()
        .map(|&(a, b)| Link {
            level: 1,
            a,
            b,
            cond: VarSet::new(),
            a_parent: None,
            b_parent: None,
        })
        .collect();
    level1.sort_by(|l, r| (l.a, l.b).cmp(&(r.a, r.b)));
    levels.push((0..level1.len()).collect());
    links.extend(level1);

    for tree in &trees {
        let k = tree.order();
        let mut level_links: Vec<Link> = Vec::new();
        for e in tree.tree_edges() {
            let ki = &tree.clusters()[e.i];
            let kj = &tree.clusters()[e.j];
            let sep = ki.intersection(kj);
            let ai = ki.difference(&sep);
            let bj = kj.difference(&sep);
            let (Some(x), Some(y)) = (ai.only(), bj.only()) else {
                return Err(Error::Structure(format!(
                    "link between {ki} and {kj}: conditioned sets are not single vertices"
                )));
            };
            let (a, b) = (x.min(y), x.max(y));
            level_links.push(Link {
                level: k,
                a,
                b,
                cond: sep,
                a_parent: None,
                b_parent: None,
            });
        }
        level_links.sort_by(|l, r| (l.a, l.b).cmp(&(r.a, r.b)));
        let start = links.len();
        levels.push((start..start + level_links.len()).collect());
        links.extend(level_links);
    }

    // Conditioned pairs must be distinct across the whole vine.
    {
        let mut pairs: Vec<(u32, u32)> = links.iter().map(|l| (l.a, l.b)).collect();
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        if pairs.len() != before {
            return Err(Error::Structure(
                "two links share the same conditioned pair; the tree sequence is degenerate".into(),
            ));
        }
    }

    // Resolve the h-recursion parents: for link (a, b | S) at level k, the
    // a-side parent is a level k-1 link with constraint set {a} union S
    // and a in its conditioned pair.
    for level in 2..=levels.len() {
        let (prev_ids, cur_ids) = {
            let prev = levels[level - 2].clone();
            let cur = levels[level - 1].clone();
            (prev, cur)
        };
        for id in cur_ids {
            let constraint_a = links[id].cond.with(links[id].a);
            let constraint_b = links[id].cond.with(links[id].b);
            let mut a_parent = None;
            let mut b_parent = None;
            for &pid in &prev_ids {
                let p = &links[pid];
                let pc = p.constraint();
                if a_parent.is_none() && pc == constraint_a {
                    if p.a == links[id].a {
                        a_parent = Some(ParentRef { link: pid, side: Side::A });
                    } else if p.b == links[id].a {
                        a_parent = Some(ParentRef { link: pid, side: Side::B });
                    }
                }
                if b_parent.is_none() && pc == constraint_b {
                    if p.a == links[id].b {
                        b_parent = Some(ParentRef { link: pid, side: Side::A });
                    } else if p.b == links[id].b {
                        b_parent = Some(ParentRef { link: pid, side: Side::B });
                    }
                }
            }
            links[id].a_parent = a_parent;
            links[id].b_parent = b_parent;
        }
    }

    Ok(CherryVineStructure {
        vertices,
        first_tree: normalized,
        trees,
        links,
        levels,
    })
}

/// A cherry-vine structure with a bivariate copula on every link.
#[derive(Debug, Clone, PartialEq)]
pub struct VineModel {
    structure: CherryVineStructure,
    copulas: Vec<BivariateCopula>,
}

impl VineModel {
    /// Assign copulas by edge label; every link needs exactly one entry.
    pub fn new(
        structure: CherryVineStructure,
        assignments: Vec<(EdgeLabel, BivariateCopula)>,
    ) -> Result<Self> {
        let mut copulas = vec![None; structure.links.len()];
        for (label, copula) in assignments {
            let idx = structure
                .links
                .iter()
                .position(|l| l.label() == label)
                .ok_or_else(|| {
                    Error::Structure(format!("no link with label {label} in the structure"))
                })?;
            if copulas[idx].replace(copula).is_some() {
                return Err(Error::Structure(format!(
                    "duplicate copula assignment for link {label}"
                )));
            }
        }
        if let Some(pos) = copulas.iter().position(|c| c.is_none()) {
            return Err(Error::Structure(format!(
                "link {} has no copula assigned",
                structure.links[pos].label()
            )));
        }
        Ok(VineModel {
            structure,
            copulas: copulas.into_iter().map(|c| c.unwrap()).collect(),
        })
    }

    /// All links set to the independence copula.
    pub fn independence(structure: CherryVineStructure) -> Self {
        let n = structure.links.len();
        VineModel {
            structure,
            copulas: vec![BivariateCopula::Independence; n],
        }
    }

    pub fn structure(&self) -> &CherryVineStructure {
        &self.structure
    }

    pub fn d(&self) -> usize {
        self.structure.d()
    }

    /// Iterate (label, copula) pairs in level order.
    pub fn pair_copulas(&self) -> impl Iterator<Item = (EdgeLabel, &BivariateCopula)> + '_ {
        self.structure
            .links
            .iter()
            .zip(&self.copulas)
            .map(|(l, c)| (l.label(), c))
    }

    pub fn copula_for(&self, label: &EdgeLabel) -> Option<&BivariateCopula> {
        self.structure
            .links
            .iter()
            .position(|l| &l.label() == label)
            .map(|i| &self.copulas[i])
    }

    pub(crate) fn copulas(&self) -> &[BivariateCopula] {
        &self.copulas
    }

    /// Number of links carrying a non-independence copula.
    pub fn dependent_link_count(&self) -> usize {
        self.copulas.iter().filter(|c| !c.is_independence()).count()
    }

    /// Set every pair copula whose conditioning set has size >= k to the
    /// independence copula; the structure is unchanged.
    pub fn truncate(&self, k: usize) -> Result<VineModel> {
        let d = self.d();
        if k < 1 || k > d - 1 {
            return Err(Error::LevelOutOfRange { level: k, max: d - 1 });
        }
        let copulas = self
            .structure
            .links
            .iter()
            .zip(&self.copulas)
            .map(|(l, c)| {
                if l.cond.len() >= k {
                    BivariateCopula::Independence
                } else {
                    *c
                }
            })
            .collect();
        Ok(VineModel {
            structure: self.structure.clone(),
            copulas,
        })
    }

    /// Conditional CDF value F_{x | rest-of-link} for one side of a link:
    /// the argument the link's copula receives.
    pub(crate) fn side_value(
        &self,
        link_id: usize,
        side: Side,
        u: &[f64],
        memo: &mut [f64],
    ) -> Result<f64> {
        let slot = 2 * link_id + if side == Side::A { 0 } else { 1 };
        if !memo[slot].is_nan() {
            return Ok(memo[slot]);
        }
        let link = &self.structure.links[link_id];
        let value = if link.level == 1 {
            let vertex = if side == Side::A { link.a } else { link.b };
            clamp_unit(u[self.structure.coord(vertex)])
        } else {
            let vertex = if side == Side::A { link.a } else { link.b };
            let parent = if side == Side::A {
                link.a_parent
            } else {
                link.b_parent
            }
            .ok_or_else(|| Error::NotRealizable {
                target: vertex,
                given: link.cond.to_string(),
            })?;
            let target = self.side_value(parent.link, parent.side, u, memo)?;
            let given = self.side_value(parent.link, parent.side.other(), u, memo)?;
            self.copulas[parent.link].h_function(target, given)
        };
        memo[slot] = value;
        Ok(value)
    }

    pub(crate) fn new_memo(&self) -> Vec<f64> {
        vec![f64::NAN; 2 * self.structure.links.len()]
    }

    /// Log density of the vine copula at a point of the open unit cube
    /// (coordinates are clamped to the evaluation domain first). The value
    /// is the sum over all links of the log pair-copula density evaluated
    /// at the link's conditional CDFs; conditional CDFs are computed by the
    /// recursive h-function formula with memoization within the evaluation.
    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        let mut memo = self.new_memo();
        self.log_density_with_memo(u, &mut memo)
    }

    pub(crate) fn log_density_with_memo(&self, u: &[f64], memo: &mut [f64]) -> Result<f64> {
        if u.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: u.len(),
            });
        }
        let mut total = 0.0;
        for (id, copula) in self.copulas.iter().enumerate() {
            if copula.is_independence() {
                continue;
            }
            let a = self.side_value(id, Side::A, u, memo)?;
            let b = self.side_value(id, Side::B, u, memo)?;
            let term = copula.log_density(UnitPair::new(a, b));
            if !term.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("log density of link {}", self.structure.links[id].label()),
                });
            }
            total += term;
        }
        Ok(total)
    }

    /// Sum of log densities over a subset of links: the log density of the
    /// sub-vine spanned by those links.
    pub(crate) fn partial_log_density(
        &self,
        link_ids: &[usize],
        u: &[f64],
        memo: &mut [f64],
    ) -> Result<f64> {
        let mut total = 0.0;
        for &id in link_ids {
            let copula = &self.copulas[id];
            if copula.is_independence() {
                continue;
            }
            let a = self.side_value(id, Side::A, u, memo)?;
            let b = self.side_value(id, Side::B, u, memo)?;
            let term = copula.log_density(UnitPair::new(a, b));
            if !term.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("log density of link {}", self.structure.links[id].label()),
                });
            }
            total += term;
        }
        Ok(total)
    }

    /// Conditional CDF `F_{j | D}(u_j | u_D)` for a conditioning set D that
    /// is realized along the vine's recursion paths. `D` empty returns the
    /// (clamped) j-th coordinate.
    pub fn conditional_cdf(&self, j: u32, given: &VarSet, u: &[f64]) -> Result<f64> {
        if u.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: u.len(),
            });
        }
        if !self.structure.vertices.contains(j) {
            return Err(Error::VertexNotFound(j));
        }
        if given.contains(j) {
            return Err(Error::InvalidInput(format!(
                "conditioning set {given} contains the target {j}"
            )));
        }
        for v in given.iter() {
            if !self.structure.vertices.contains(v) {
                return Err(Error::VertexNotFound(v));
            }
        }
        if given.is_empty() {
            return Ok(clamp_unit(u[self.structure.coord(j)]));
        }
        let level = given.len();
        if level > self.structure.levels.len() {
            return Err(Error::NotRealizable {
                target: j,
                given: given.to_string(),
            });
        }
        let constraint = given.with(j);
        let mut memo = self.new_memo();
        for &id in self.structure.level_links(level) {
            let link = &self.structure.links[id];
            if (link.a == j || link.b == j) && link.constraint() == constraint {
                let (target_side, other_side) = if link.a == j {
                    (Side::A, Side::B)
                } else {
                    (Side::B, Side::A)
                };
                let target = self.side_value(id, target_side, u, &mut memo)?;
                let given_val = self.side_value(id, other_side, u, &mut memo)?;
                return Ok(self.copulas[id].h_function(target, given_val));
            }
        }
        Err(Error::NotRealizable {
            target: j,
            given: given.to_string(),
        })
    }

    /// All links whose constraint set is contained in `scope`. For a
    /// cluster of one of the structure's trees this is exactly the
    /// sub-vine on the cluster's variables.
    pub(crate) fn links_within(&self, scope: &VarSet) -> Vec<usize> {
        self.structure
            .links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.constraint().is_subset(scope))
            .map(|(i, _)| i)
            .collect()
    }
}
