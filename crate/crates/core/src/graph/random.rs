//! Random generation of valid junction trees and cherry trees, used for
//! structure fuzzing and property checks.

use rand::seq::IteratorRandom;
use rand::Rng;

use crate::graph::{CherryTree, JunctionTree};
use crate::set::{VarSet, VertexSet};

/// Generate a random valid junction tree on `1..=d`.
///
/// Growth scheme: start from a random cluster, then repeatedly attach a new
/// cluster made of a proper nonempty subset of an existing cluster plus at
/// least one fresh vertex. Every tree produced this way covers the vertex
/// set, has no subset pairs, and satisfies the running intersection
/// property by construction.
pub fn random_junction_tree<R: Rng>(d: usize, rng: &mut R) -> JunctionTree {
    assert!(d >= 1);
    let vertices = VertexSet::standard(d);
    if d == 1 {
        return JunctionTree::new(vertices, vec![VarSet::singleton(1)], vec![]).unwrap();
    }

    let mut unused: Vec<u32> = (1..=d as u32).collect();
    let first_size = rng.random_range(2..=d.min(5));
    let mut first = VarSet::new();
    for _ in 0..first_size {
        let pos = rng.random_range(0..unused.len());
        first.insert(unused.swap_remove(pos));
    }
    let mut clusters = vec![first];
    let mut edges: Vec<(usize, usize)> = Vec::new();

    while !unused.is_empty() {
        // Pick a host cluster with at least two vertices so the separator
        // can be a proper nonempty subset.
        let host_idx = (0..clusters.len())
            .filter(|&i| clusters[i].len() >= 2)
            .choose(rng)
            .expect("a host cluster of size >= 2 always exists");
        let host: Vec<u32> = clusters[host_idx].to_vec();
        let sep_size = rng.random_range(1..host.len());
        let mut sep = VarSet::new();
        let mut pool = host.clone();
        for _ in 0..sep_size {
            let pos = rng.random_range(0..pool.len());
            sep.insert(pool.swap_remove(pos));
        }
        let fresh_count = rng.random_range(1..=unused.len().min(4));
        let mut cluster = sep;
        for _ in 0..fresh_count {
            let pos = rng.random_range(0..unused.len());
            cluster.insert(unused.swap_remove(pos));
        }
        let new_idx = clusters.len();
        clusters.push(cluster);
        edges.push((host_idx, new_idx));
    }

    JunctionTree::new(vertices, clusters, edges).expect("generated tree must validate")
}

/// Generate a random k-th order cherry tree on `1..=d` (requires `d >= k`).
/// Starts from a random k-subset and attaches each remaining vertex to a
/// random (k-1)-subset of a random existing cluster.
pub fn random_cherry_tree<R: Rng>(d: usize, k: usize, rng: &mut R) -> CherryTree {
    assert!(k >= 2 && d >= k);
    let vertices = VertexSet::standard(d);
    let mut unused: Vec<u32> = (1..=d as u32).collect();

    let mut first = VarSet::new();
    for _ in 0..k {
        let pos = rng.random_range(0..unused.len());
        first.insert(unused.swap_remove(pos));
    }
    let mut clusters = vec![first];
    let mut edges: Vec<(usize, usize)> = Vec::new();

    while !unused.is_empty() {
        let host_idx = rng.random_range(0..clusters.len());
        let host: Vec<u32> = clusters[host_idx].to_vec();
        let mut pool = host.clone();
        let mut sep = VarSet::new();
        for _ in 0..(k - 1) {
            let pos = rng.random_range(0..pool.len());
            sep.insert(pool.swap_remove(pos));
        }
        let pos = rng.random_range(0..unused.len());
        let mut cluster = sep;
        cluster.insert(unused.swap_remove(pos));
        let new_idx = clusters.len();
        clusters.push(cluster);
        edges.push((host_idx, new_idx));
    }

    let base = JunctionTree::new(vertices, clusters, edges).expect("generated tree must validate");
    CherryTree::new(k, base).expect("generated tree is a cherry tree")
}
