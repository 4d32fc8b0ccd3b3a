//! Hypergraphs, junction trees and cherry trees.
//!
//! A junction tree is a tree over variable clusters whose edge separators
//! are the intersections of adjacent clusters and which admits an ordering
//! with the running intersection property (RIP). A k-th order cherry tree is
//! the special case with all clusters of size k and all separators of size
//! k-1. These structures carry the factorizations evaluated in
//! [`crate::vine`].

pub mod random;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::set::{VarSet, VertexSet};

/// A hyperedge is a nonempty subset of the vertex set.
pub type Hyperedge = VarSet;

/// One edge of the cluster tree: cluster indices plus their separator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEdge {
    pub i: usize,
    pub j: usize,
    pub separator: VarSet,
}

/// A validated junction tree: clusters, tree edges with separators, and the
/// multiplicity `nu_S` (number of clusters containing S) for every distinct
/// separator set.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionTree {
    vertices: VertexSet,
    clusters: Vec<VarSet>,
    tree_edges: Vec<TreeEdge>,
    separator_multiplicities: BTreeMap<VarSet, usize>,
}

/// A single validation failure with a stable rule identifier.
#[derive(Debug, Clone)]
pub struct Violation {
    pub rule: &'static str,
    pub description: String,
    pub elements: Vec<String>,
}

/// Outcome of hypergraph validation. `witness_ordering` (indices into the
/// hyperedge list) is present exactly when the input is valid.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub witness_ordering: Option<Vec<usize>>,
}

/// Check the running intersection property of one ordering: every edge's
/// intersection with the union of its predecessors must lie inside a single
/// predecessor.
pub fn ordering_satisfies_rip(hyperedges: &[VarSet], order: &[usize]) -> bool {
    let mut union = VarSet::new();
    for (pos, &idx) in order.iter().enumerate() {
        let sep = hyperedges[idx].intersection(&union);
        if pos > 0 && !sep.is_empty() {
            let contained = order[..pos]
                .iter()
                .any(|&early| sep.is_subset(&hyperedges[early]));
            if !contained {
                return false;
            }
        }
        union = union.union(&hyperedges[idx]);
    }
    true
}

/// The pairwise formulation of the running intersection property: for all
/// positions i < j-1, the intersection of `K_i` and `K_j` is contained in every edge strictly
/// between them.
pub fn ordering_satisfies_pairwise_rip(hyperedges: &[VarSet], order: &[usize]) -> bool {
    let m = order.len();
    for i in 0..m {
        for j in (i + 2)..m {
            let inter = hyperedges[order[i]].intersection(&hyperedges[order[j]]);
            if inter.is_empty() {
                continue;
            }
            for s in (i + 1)..j {
                if !inter.is_subset(&hyperedges[order[s]]) {
                    return false;
                }
            }
        }
    }
    true
}

fn greedy_rip_ordering(hyperedges: &[VarSet]) -> Option<Vec<usize>> {
    let m = hyperedges.len();
    for start in 0..m {
        let mut order = vec![start];
        let mut used = vec![false; m];
        used[start] = true;
        let mut union = hyperedges[start].clone();
        for _ in 1..m {
            let mut best: Option<(usize, usize)> = None; // (overlap, idx)
            for (idx, edge) in hyperedges.iter().enumerate() {
                if used[idx] {
                    continue;
                }
                let overlap = edge.intersection(&union).len();
                let better = match best {
                    None => true,
                    Some((b, _)) => overlap > b,
                };
                if better {
                    best = Some((overlap, idx));
                }
            }
            let (_, idx) = best.unwrap();
            used[idx] = true;
            union = union.union(&hyperedges[idx]);
            order.push(idx);
        }
        if ordering_satisfies_rip(hyperedges, &order) {
            return Some(order);
        }
    }
    None
}

fn exhaustive_rip_ordering(hyperedges: &[VarSet]) -> Option<Vec<usize>> {
    let m = hyperedges.len();
    let mut order: Vec<usize> = (0..m).collect();
    permute_search(&mut order, 0, hyperedges)
}

fn permute_search(order: &mut Vec<usize>, k: usize, hyperedges: &[VarSet]) -> Option<Vec<usize>> {
    if k == order.len() {
        if ordering_satisfies_rip(hyperedges, order) {
            return Some(order.clone());
        }
        return None;
    }
    for i in k..order.len() {
        order.swap(k, i);
        if let Some(found) = permute_search(order, k + 1, hyperedges) {
            return Some(found);
        }
        order.swap(k, i);
    }
    None
}

/// Maximum-weight spanning tree over the cluster graph with weights
/// the pairwise intersection sizes, Kruskal with ties broken by
/// lexicographic index order.
fn max_weight_spanning_tree(hyperedges: &[VarSet]) -> Vec<(usize, usize)> {
    let m = hyperedges.len();
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            edges.push((hyperedges[i].intersection(&hyperedges[j]).len(), i, j));
        }
    }
    edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let mut chosen = Vec::with_capacity(m.saturating_sub(1));
    for (_, i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            chosen.push((i, j));
            if chosen.len() + 1 == m {
                break;
            }
        }
    }
    chosen
}

fn mst_preorder_ordering(hyperedges: &[VarSet]) -> Option<Vec<usize>> {
    let m = hyperedges.len();
    if m == 0 {
        return None;
    }
    let edges = max_weight_spanning_tree(hyperedges);
    let mut adj = vec![Vec::new(); m];
    for &(i, j) in &edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut order = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(c) = queue.pop_front() {
        order.push(c);
        for &nb in &adj[c] {
            if !seen[nb] {
                seen[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    if ordering_satisfies_rip(hyperedges, &order) {
        Some(order)
    } else {
        None
    }
}

/// Validate a hypergraph: no hyperedge may be a subset of another, the
/// hyperedges must cover the vertex set, and an ordering with the running
/// intersection property must exist.
///
/// RIP existence is decided by a greedy maximum-overlap ordering tried from
/// every start; if that fails, exhaustive search is used for up to 8
/// hyperedges, and the preorder of a maximum-weight spanning tree of the
/// cluster graph settles larger instances.
pub fn validate_hypergraph(vertices: &VertexSet, hyperedges: &[VarSet]) -> Result<ValidationReport> {
    if hyperedges.is_empty() {
        return Err(Error::EmptyHyperedges);
    }
    for edge in hyperedges {
        if edge.is_empty() {
            return Err(Error::InvalidInput("hyperedge is empty".into()));
        }
        for v in edge.iter() {
            if !vertices.contains(v) {
                return Err(Error::UnknownVertex {
                    edge: edge.to_string(),
                    vertex: v,
                });
            }
        }
    }

    let mut violations = Vec::new();

    for (i, a) in hyperedges.iter().enumerate() {
        for (j, b) in hyperedges.iter().enumerate() {
            if i != j && a.is_subset(b) && (a != b || i < j) {
                violations.push(Violation {
                    rule: "no-subset",
                    description: format!("hyperedge {a} is a subset of {b}"),
                    elements: vec![a.to_string(), b.to_string()],
                });
            }
        }
    }

    let mut union = VarSet::new();
    for edge in hyperedges {
        union = union.union(edge);
    }
    if union != vertices.as_varset() {
        let missing = vertices.as_varset().difference(&union);
        violations.push(Violation {
            rule: "cover",
            description: format!("vertices {missing} are not covered by any hyperedge"),
            elements: vec![missing.to_string()],
        });
    }

    let mut witness = None;
    if violations.is_empty() {
        witness = greedy_rip_ordering(hyperedges)
            .or_else(|| {
                if hyperedges.len() <= 8 {
                    exhaustive_rip_ordering(hyperedges)
                } else {
                    None
                }
            })
            .or_else(|| mst_preorder_ordering(hyperedges));
        if witness.is_none() {
            violations.push(Violation {
                rule: "rip",
                description: "no ordering satisfies the running intersection property".into(),
                elements: hyperedges.iter().map(|e| e.to_string()).collect(),
            });
        }
    }

    Ok(ValidationReport {
        valid: violations.is_empty(),
        violations,
        witness_ordering: witness,
    })
}

impl JunctionTree {
    /// Assemble and fully validate a junction tree from clusters and tree
    /// edges (separators are recomputed from the cluster intersections).
    pub fn new(
        vertices: VertexSet,
        clusters: Vec<VarSet>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let m = clusters.len();
        if m == 0 {
            return Err(Error::EmptyHyperedges);
        }
        for c in &clusters {
            if c.is_empty() {
                return Err(Error::InvalidInput("cluster is empty".into()));
            }
            for v in c.iter() {
                if !vertices.contains(v) {
                    return Err(Error::UnknownVertex {
                        edge: c.to_string(),
                        vertex: v,
                    });
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                if i != j && clusters[i].is_subset(&clusters[j]) {
                    return Err(Error::Structure(format!(
                        "cluster {} is a subset of cluster {}",
                        clusters[i], clusters[j]
                    )));
                }
            }
        }
        if edges.len() + 1 != m {
            return Err(Error::Structure(format!(
                "{} tree edges cannot span {} clusters",
                edges.len(),
                m
            )));
        }
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            r
        }
        let mut tree_edges = Vec::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i >= m || j >= m || i == j {
                return Err(Error::Structure(format!("invalid tree edge ({i},{j})")));
            }
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri == rj {
                return Err(Error::Structure("tree edges contain a cycle".into()));
            }
            parent[ri] = rj;
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            tree_edges.push(TreeEdge {
                i: lo,
                j: hi,
                separator: clusters[lo].intersection(&clusters[hi]),
            });
        }

        // Counting law for every vertex: clusters containing v must exceed
        // separator edges containing v by exactly one. For a spanning tree
        // this is equivalent to the vertex-subtree property, hence to the
        // running intersection property.
        for &v in vertices.labels() {
            let in_clusters = clusters.iter().filter(|c| c.contains(v)).count();
            let in_seps = tree_edges
                .iter()
                .filter(|e| e.separator.contains(v))
                .count();
            if in_clusters != in_seps + 1 {
                return Err(Error::Structure(format!(
                    "vertex {v}: {in_clusters} clusters but {in_seps} separator edges; tree is not a junction tree"
                )));
            }
        }

        let mut separator_multiplicities = BTreeMap::new();
        for e in &tree_edges {
            if separator_multiplicities.contains_key(&e.separator) {
                continue;
            }
            let nu = clusters
                .iter()
                .filter(|c| e.separator.is_subset(c))
                .count();
            separator_multiplicities.insert(e.separator.clone(), nu);
        }

        Ok(JunctionTree {
            vertices,
            clusters,
            tree_edges,
            separator_multiplicities,
        })
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn clusters(&self) -> &[VarSet] {
        &self.clusters
    }

    pub fn tree_edges(&self) -> &[TreeEdge] {
        &self.tree_edges
    }

    /// `nu_S` for every distinct separator set: the number of clusters that
    /// contain it.
    pub fn separator_multiplicities(&self) -> &BTreeMap<VarSet, usize> {
        &self.separator_multiplicities
    }

    /// A cluster ordering satisfying the running intersection property
    /// (breadth-first preorder of the tree from cluster 0).
    pub fn rip_ordering(&self) -> Vec<usize> {
        let m = self.clusters.len();
        let mut adj = vec![Vec::new(); m];
        for e in &self.tree_edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut order = Vec::with_capacity(m);
        let mut seen = vec![false; m];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for &nb in &adj[c] {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        order
    }

    /// For vertex `v`: the number of clusters containing it and the number
    /// of tree edges (with multiplicity) whose separator contains it. The
    /// first always exceeds the second by one; a mismatch means the tree
    /// invariants were broken after construction and is reported as an
    /// error.
    pub fn containment_counts(&self, v: u32) -> Result<(usize, usize)> {
        if !self.vertices.contains(v) {
            return Err(Error::VertexNotFound(v));
        }
        let in_clusters = self.clusters.iter().filter(|c| c.contains(v)).count();
        let in_seps = self
            .tree_edges
            .iter()
            .filter(|e| e.separator.contains(v))
            .count();
        if in_clusters != in_seps + 1 {
            return Err(Error::Structure(format!(
                "counting law violated for vertex {v}: {in_clusters} clusters vs {in_seps} separator edges"
            )));
        }
        Ok((in_clusters, in_seps))
    }
}

/// Build a junction tree from a validated hypergraph: maximum-weight
/// spanning tree on pairwise intersection sizes, ties broken by
/// lexicographic cluster index order.
pub fn build_junction_tree(vertices: &VertexSet, hyperedges: &[VarSet]) -> Result<JunctionTree> {
    let report = validate_hypergraph(vertices, hyperedges)?;
    if !report.valid {
        let rules: Vec<&str> = report.violations.iter().map(|v| v.rule).collect();
        return Err(Error::Structure(format!(
            "hypergraph validation failed: {}",
            rules.join(", ")
        )));
    }
    let edges = max_weight_spanning_tree(hyperedges);
    JunctionTree::new(vertices.clone(), hyperedges.to_vec(), edges)
}

/// True when every cluster has size `k` and every separator size `k - 1`.
pub fn is_cherry_tree(jt: &JunctionTree, k: usize) -> bool {
    jt.clusters().iter().all(|c| c.len() == k)
        && jt.tree_edges().iter().all(|e| e.separator.len() == k - 1)
}

/// A k-th order cherry tree: a junction tree with uniform cluster size k
/// and separator size k-1.
#[derive(Debug, Clone, PartialEq)]
pub struct CherryTree {
    order: usize,
    base: JunctionTree,
}

impl CherryTree {
    pub fn new(order: usize, base: JunctionTree) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidInput(
                "cherry tree order must be at least 2".into(),
            ));
        }
        if !is_cherry_tree(&base, order) {
            return Err(Error::Structure(format!(
                "not a {order}-th order cherry tree: cluster or separator sizes are off"
            )));
        }
        Ok(CherryTree { order, base })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> &JunctionTree {
        &self.base
    }

    pub fn clusters(&self) -> &[VarSet] {
        self.base.clusters()
    }

    pub fn tree_edges(&self) -> &[TreeEdge] {
        self.base.tree_edges()
    }
}

/// Merge linked clusters of a k-th order cherry tree into a (k+1)-th order
/// one. Tree edges are walked breadth-first from the lowest-indexed cluster;
/// each visited edge contributes the union of its endpoints, and every new
/// cluster links to the new cluster of the edge it was reached through, so
/// consecutive merges share k vertices.
pub fn expand_cherry_tree(ct: &CherryTree) -> Result<CherryTree> {
    let clusters = ct.clusters();
    let m = clusters.len();
    if m < 2 {
        return Err(Error::SingleCluster);
    }
    let mut adj = vec![Vec::new(); m];
    for e in ct.tree_edges() {
        adj[e.i].push(e.j);
        adj[e.j].push(e.i);
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut new_clusters: Vec<VarSet> = Vec::with_capacity(m - 1);
    let mut new_edges: Vec<(usize, usize)> = Vec::with_capacity(m.saturating_sub(2));
    // anchor[c] = index of the new cluster created by the edge through
    // which cluster c was reached (for the root: its first outgoing edge).
    let mut anchor = vec![usize::MAX; m];
    let mut seen = vec![false; m];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(c) = queue.pop_front() {
        for &nb in &adj[c] {
            if seen[nb] {
                continue;
            }
            seen[nb] = true;
            let union = clusters[c].union(&clusters[nb]);
            let idx = new_clusters.len();
            new_clusters.push(union);
            if anchor[c] != usize::MAX {
                new_edges.push((anchor[c], idx));
            } else {
                anchor[c] = idx;
            }
            anchor[nb] = idx;
            queue.push_back(nb);
        }
    }

    let base = JunctionTree::new(ct.base().vertices().clone(), new_clusters, new_edges)?;
    CherryTree::new(ct.order() + 1, base)
}
