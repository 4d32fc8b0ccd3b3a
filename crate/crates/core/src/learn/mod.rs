//! Structure and parameter learning: rank transforms to the copula scale,
//! empirical Kendall-tau dependence matrices, maximum-dependence first
//! trees, greedy cherry-tree growth and truncated-vine fitting.

mod fit;
mod transform;

pub use fit::{fit_truncated_vine, greedy_cherry_tree, FitOptions, VineFitter};
pub use transform::junction_tree_to_cherry_tree;

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::normal::norm_quantile;

/// Data on the copula scale: an n x d matrix of values in (0, 1), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl PseudoObservations {
    /// Wrap data already on the copula scale (for example model samples).
    /// Values must be strictly inside (0, 1).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::TooFewObservations { required: 1, got: 0 });
        }
        let d = rows[0].len();
        let mut values = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for &v in row {
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "pseudo-observation {v} outside (0,1)"
                    )));
                }
                values.push(v);
            }
        }
        Ok(PseudoObservations { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.d + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.d..(row + 1) * self.d]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, col)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n).map(|i| self.row(i))
    }
}

/// Rank-transform raw data to the copula scale: each value becomes its
/// within-column rank divided by n+1. Ties receive average ranks and are
/// then jittered deterministically (driven by `seed`) to restore
/// distinctness.
pub fn pseudo_observations(rows: &[Vec<f64>], seed: u64) -> Result<PseudoObservations> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewObservations { required: 2, got: n });
    }
    let d = rows[0].len();
    for row in rows {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    let mut values = vec![0.0; n * d];
    for col in 0..d {
        let column: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        if column.iter().all(|&x| x == column[0]) {
            return Err(Error::ConstantColumn(col));
        }
        let ranks = average_ranks_with_jitter(&column, seed, col as u64, n);
        for (row, &r) in ranks.iter().enumerate() {
            values[row * d + col] = r;
        }
    }
    Ok(PseudoObservations { n, d, values })
}

fn average_ranks_with_jitter(column: &[f64], seed: u64, col: u64, n: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let mut out = vec![0.0; n];
    let denom = (n + 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(col + 1)));
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && column[idx[j + 1]] == column[idx[i]] {
            j += 1;
        }
        let group = j - i + 1;
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        if group == 1 {
            out[idx[i]] = avg_rank / denom;
        } else {
            // Spread tied entries symmetrically around the average rank; a
            // seeded shuffle decides which member gets which offset.
            let mut members: Vec<usize> = idx[i..=j].to_vec();
            for k in (1..members.len()).rev() {
                let swap = rng.random_range(0..=k);
                members.swap(k, swap);
            }
            let step = 1.0 / (denom * (group as f64 + 1.0));
            for (pos, &row) in members.iter().enumerate() {
                let offset = (pos as f64 - (group as f64 - 1.0) / 2.0) * step;
                out[row] = avg_rank / denom + offset;
            }
        }
        i = j + 1;
    }
    out
}

/// Kendall's tau between two equally long columns, in the tau-a convention
/// `(concordant - discordant) / (n choose 2)`; pairs tied in either
/// coordinate count toward neither side. Computed in O(n log n) by sorting
/// plus inversion counting.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewObservations { required: 2, got: n });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::ConstantColumn(0));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::ConstantColumn(1));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let sorted_y: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    // Tie bookkeeping.
    let mut ties_x = 0u64;
    let mut ties_xy = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let g = (j - i + 1) as u64;
        ties_x += g * (g - 1) / 2;
        let mut a = i;
        while a <= j {
            let mut b = a;
            while b + 1 <= j && sorted_y[b + 1] == sorted_y[a] {
                b += 1;
            }
            let gg = (b - a + 1) as u64;
            ties_xy += gg * (gg - 1) / 2;
            a = b + 1;
        }
        i = j + 1;
    }
    let mut sy = y.to_vec();
    sy.sort_by(|a, b| a.total_cmp(b));
    let mut ties_y = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sy[j + 1] == sy[i] {
            j += 1;
        }
        let g = (j - i + 1) as u64;
        ties_y += g * (g - 1) / 2;
        i = j + 1;
    }

    let discordant = count_strict_inversions(&sorted_y);
    let total = (n as u64) * (n as u64 - 1) / 2;
    let concordant = total - discordant - (ties_x + ties_y - ties_xy);
    Ok((concordant as f64 - discordant as f64) / total as f64)
}

/// Count pairs i < j with a[i] > a[j] by merge sort.
fn count_strict_inversions(a: &[f64]) -> u64 {
    fn merge_count(buf: &mut [f64], tmp: &mut [f64]) -> u64 {
        let n = buf.len();
        if n <= 1 {
            return 0;
        }
        let mid = n / 2;
        let mut count = merge_count(&mut buf[..mid], tmp) + merge_count(&mut buf[mid..], tmp);
        let (left, right) = buf.split_at(mid);
        let (mut i, mut j, mut k) = (0, 0, 0);
        while i < left.len() && j < right.len() {
            if left[i] <= right[j] {
                tmp[k] = left[i];
                i += 1;
            } else {
                tmp[k] = right[j];
                count += (left.len() - i) as u64;
                j += 1;
            }
            k += 1;
        }
        while i < left.len() {
            tmp[k] = left[i];
            i += 1;
            k += 1;
        }
        while j < right.len() {
            tmp[k] = right[j];
            j += 1;
            k += 1;
        }
        buf.copy_from_slice(&tmp[..n]);
        count
    }
    let mut buf = a.to_vec();
    let mut tmp = vec![0.0; a.len()];
    merge_count(&mut buf, &mut tmp)
}

/// Symmetric matrix of pairwise empirical Kendall taus with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceMatrix {
    d: usize,
    values: Vec<f64>,
}

impl DependenceMatrix {
    /// Build from explicit rows; validates symmetry, the unit diagonal and
    /// the [-1, 1] range.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let mut values = vec![0.0; d * d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::InvalidInput(format!("tau {v} outside [-1, 1]")));
                }
                values[i * d + j] = v;
            }
        }
        for i in 0..d {
            if values[i * d + i] != 1.0 {
                return Err(Error::InvalidInput("diagonal must be 1".into()));
            }
            for j in 0..i {
                if values[i * d + j] != values[j * d + i] {
                    return Err(Error::InvalidInput("matrix must be symmetric".into()));
                }
            }
        }
        Ok(DependenceMatrix { d, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn tau(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }
}

/// Pairwise empirical Kendall taus of the pseudo-observation columns.
pub fn empirical_tau_matrix(po: &PseudoObservations) -> Result<DependenceMatrix> {
    if po.n() < 10 {
        return Err(Error::TooFewObservations {
            required: 10,
            got: po.n(),
        });
    }
    let d = po.d();
    let mut values = vec![0.0; d * d];
    let columns: Vec<Vec<f64>> = (0..d).map(|j| po.column(j)).collect();
    for i in 0..d {
        values[i * d + i] = 1.0;
        for j in (i + 1)..d {
            let tau = kendall_tau(&columns[i], &columns[j])?;
            values[i * d + j] = tau;
            values[j * d + i] = tau;
        }
    }
    Ok(DependenceMatrix { d, values })
}

/// Maximum spanning tree on the absolute taus: the dependence-weighted
/// first tree of a vine. Kruskal with ties broken by lexicographic edge
/// order, so learned structures are reproducible. Vertices are labeled
/// 1..=d; returned edges have the smaller label first and are sorted.
pub fn fit_first_tree(dm: &DependenceMatrix) -> Vec<(u32, u32)> {
    let d = dm.d();
    assert!(d >= 2, "need at least two variables");
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            edges.push((i, j));
        }
    }
    edges.sort_by(|&(ai, aj), &(bi, bj)| {
        dm.tau(bi, bj)
            .abs()
            .total_cmp(&dm.tau(ai, aj).abs())
            .then(ai.cmp(&bi))
            .then(aj.cmp(&bj))
    });
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        r
    }
    let mut chosen = Vec::with_capacity(d - 1);
    for (i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            chosen.push((i as u32 + 1, j as u32 + 1));
            if chosen.len() == d - 1 {
                break;
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

/// The asymptotic normal test statistic for Kendall's tau:
/// `|tau| sqrt(9 n (n-1) / (2 (2n + 5)))`.
pub fn tau_independence_statistic(tau: f64, n: usize) -> f64 {
    let nf = n as f64;
    tau.abs() * (9.0 * nf * (nf - 1.0) / (2.0 * (2.0 * nf + 5.0))).sqrt()
}

/// Asymptotic test for pairwise independence on residual pairs: returns
/// true (treat the link as an independence copula) when the tau statistic
/// stays below the standard normal `1 - alpha/2` quantile.
pub fn independence_filter(x: &[f64], y: &[f64], alpha: f64) -> Result<bool> {
    let n = x.len();
    if n < 10 {
        return Err(Error::TooFewObservations {
            required: 10,
            got: n,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha {alpha} outside (0,1)"
        )));
    }
    let tau = kendall_tau(x, y)?;
    Ok(tau_independence_statistic(tau, n) < norm_quantile(1.0 - alpha / 2.0))
}

#[cfg(test)]
mod tests;
