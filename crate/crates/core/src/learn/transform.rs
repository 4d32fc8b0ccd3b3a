//! Transformation of a k-width junction tree into a k-th order cherry tree
//! that contains every original cluster, so any density factorizing over
//! the input also factorizes over the output.

use crate::error::{Error, Result};
use crate::graph::{is_cherry_tree, CherryTree, JunctionTree};
use crate::set::VarSet;

/// Embed a junction tree with clusters of size at most `k` into a k-th
/// order cherry tree.
///
/// Clusters are processed in a running-intersection ordering. Each new
/// vertex of a cluster is attached through a fresh size-k cluster built
/// from the vertices the cluster shares with the part already placed,
/// padded with separator-adjacent vertices from the host cluster. Every
/// input cluster ends up inside some output cluster, and the construction
/// is deterministic.
pub fn junction_tree_to_cherry_tree(jt: &JunctionTree, k: usize) -> Result<CherryTree> {
    let d = jt.vertices().len();
    if k < 2 {
        return Err(Error::InvalidInput(
            "cherry tree order must be at least 2".into(),
        ));
    }
    if k > d {
        return Err(Error::Structure(format!(
            "order {k} exceeds the number of vertices {d}"
        )));
    }
    if let Some(big) = jt.clusters().iter().find(|c| c.len() > k) {
        return Err(Error::Structure(format!(
            "cluster {big} exceeds the target order {k}"
        )));
    }
    if is_cherry_tree(jt, k) {
        return CherryTree::new(k, jt.clone());
    }

    let order = jt.rip_ordering();
    // First-appearance vertex sequence along the ordering.
    let mut sigma: Vec<u32> = Vec::with_capacity(d);
    {
        let mut seen = VarSet::new();
        for &ci in &order {
            for v in jt.clusters()[ci].iter() {
                if seen.insert(v) {
                    sigma.push(v);
                }
            }
        }
    }

    let mut out_clusters: Vec<VarSet> = Vec::new();
    let mut out_edges: Vec<(usize, usize)> = Vec::new();

    // Root cluster: the first cluster padded with the next vertices to
    // appear, up to size k.
    let mut placed = jt.clusters()[order[0]].clone();
    {
        let mut root = placed.clone();
        for &v in &sigma {
            if root.len() == k {
                break;
            }
            root.insert(v);
        }
        placed = root.clone();
        out_clusters.push(root);
    }

    for &ci in &order[1..] {
        let cluster = &jt.clusters()[ci];
        let mut need = cluster.intersection(&placed);
        let fresh: Vec<u32> = cluster.difference(&placed).to_vec();
        // A host containing everything already placed from this cluster
        // exists by the running intersection property.
        let mut host = out_clusters
            .iter()
            .position(|c| need.is_subset(c))
            .ok_or_else(|| {
                Error::Structure(format!(
                    "no existing cluster hosts the separator {need} of {cluster}"
                ))
            })?;
        for &v in &fresh {
            let mut base = need.clone();
            for w in out_clusters[host].iter() {
                if base.len() == k - 1 {
                    break;
                }
                base.insert(w);
            }
            let new_cluster = base.with(v);
            let idx = out_clusters.len();
            out_clusters.push(new_cluster);
            out_edges.push((host, idx));
            host = idx;
            need.insert(v);
            placed.insert(v);
        }
    }

    for cluster in jt.clusters() {
        debug_assert!(
            out_clusters.iter().any(|c| cluster.is_subset(c)),
            "containment lost for {cluster}"
        );
    }

    let base = JunctionTree::new(jt.vertices().clone(), out_clusters, out_edges)?;
    CherryTree::new(k, base)
}
