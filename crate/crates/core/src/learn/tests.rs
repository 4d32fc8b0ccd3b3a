use approx::assert_abs_diff_eq;
use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::bicop::{BivariateCopula, Family, FitMethod};
use crate::gaussian;
use crate::graph::{build_junction_tree, is_cherry_tree};
use crate::numeric::normal::norm_quantile;
use crate::numeric::Matrix;
use crate::set::{VarSet, VertexSet};
use crate::vine::{CherryVineStructure, EdgeLabel, JunctionTreeCopulaModel, VineModel};

fn vs(labels: &[u32]) -> VarSet {
    VarSet::from_slice(labels)
}

/// O(n^2) oracle for Kendall's tau-a with tie handling.
fn kendall_tau_brute(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (x[i] - x[j]) * (y[i] - y[j]);
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n as f64 * (n as f64 - 1.0) / 2.0)
}

#[test]
fn rank_transform_basic_column() {
    // Ranks 2, 1, 3 over n + 1 = 4.
    let rows: Vec<Vec<f64>> = vec![vec![3.2], vec![1.1], vec![7.5]];
    let po = pseudo_observations(&rows, 1).unwrap();
    assert_abs_diff_eq!(po.value(0, 0), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(po.value(1, 0), 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(po.value(2, 0), 0.75, epsilon = 1e-15);
}

#[test]
fn rank_transform_is_monotone_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let raw: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random::<f64>()]).collect();
    let squashed: Vec<Vec<f64>> = raw.iter().map(|r| vec![r[0].powi(3) * 5.0 - 2.0]).collect();
    let a = pseudo_observations(&raw, 7).unwrap();
    let b = pseudo_observations(&squashed, 7).unwrap();
    for i in 0..40 {
        assert_abs_diff_eq!(a.value(i, 0), b.value(i, 0), epsilon = 1e-15);
    }
}

#[test]
fn rank_transform_without_ties_is_permutation_of_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.random::<f64>()]).collect();
    let po = pseudo_observations(&rows, 1).unwrap();
    let mut values: Vec<f64> = (0..25).map(|i| po.value(i, 0)).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    for (i, v) in values.iter().enumerate() {
        assert_abs_diff_eq!(*v, (i + 1) as f64 / 26.0, epsilon = 1e-12);
    }
}

#[test]
fn rank_transform_jitters_ties() {
    let rows: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0], vec![2.0], vec![3.0]];
    let po = pseudo_observations(&rows, 42).unwrap();
    let values: Vec<f64> = (0..4).map(|i| po.value(i, 0)).collect();
    for v in &values {
        assert!(*v > 0.0 && *v < 1.0);
    }
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    assert_eq!(sorted.len(), 4, "tied values must become distinct");
    // Tied entries stay centered on the average rank 2.5/(n+1).
    assert_abs_diff_eq!(values[1] + values[2], 2.0 * 2.5 / 5.0, epsilon = 1e-12);
    // Deterministic for a fixed seed.
    let again = pseudo_observations(&rows, 42).unwrap();
    assert_eq!(po, again);
}

#[test]
fn rank_transform_rejects_constant_column() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64]).collect();
    assert!(matches!(
        pseudo_observations(&rows, 1),
        Err(Error::ConstantColumn(0))
    ));
}

#[test]
fn tau_of_monotone_sequences() {
    let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| v * 2.0 + 1.0).collect();
    assert_abs_diff_eq!(kendall_tau(&x, &y).unwrap(), 1.0, epsilon = 1e-15);
    let z: Vec<f64> = x.iter().map(|v| -v).collect();
    assert_abs_diff_eq!(kendall_tau(&x, &z).unwrap(), -1.0, epsilon = 1e-15);
}

#[test]
fn tau_small_example() {
    // Pairs (1,2),(2,1),(3,3),(4,4): 5 concordant, 1 discordant.
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [2.0, 1.0, 3.0, 4.0];
    assert_abs_diff_eq!(kendall_tau(&x, &y).unwrap(), 4.0 / 6.0, epsilon = 1e-15);
}

#[test]
fn tau_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let n = rng.random_range(5..60);
        // Include ties by rounding.
        let x: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 8.0).round()).collect();
        let y: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 8.0).round()).collect();
        if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
            continue;
        }
        assert_abs_diff_eq!(
            kendall_tau(&x, &y).unwrap(),
            kendall_tau_brute(&x, &y),
            epsilon = 1e-12
        );
    }
}

#[test]
fn tau_matrix_is_symmetric_with_unit_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| vec![rng.random(), rng.random(), rng.random()])
        .collect();
    let po = pseudo_observations(&rows, 5).unwrap();
    let dm = empirical_tau_matrix(&po).unwrap();
    for i in 0..3 {
        assert_eq!(dm.tau(i, i), 1.0);
        for j in 0..3 {
            assert_eq!(dm.tau(i, j), dm.tau(j, i));
        }
    }
}

#[test]
fn first_tree_beats_every_other_spanning_tree() {
    let dm = DependenceMatrix::new(&[
        vec![1.0, 0.9, 0.1],
        vec![0.9, 1.0, 0.8],
        vec![0.1, 0.8, 1.0],
    ])
    .unwrap();
    let edges = fit_first_tree(&dm);
    assert_eq!(edges, vec![(1, 2), (2, 3)]);
    // Exhaustive check over the three spanning trees of K3.
    let weight = |tree: &[(usize, usize)]| -> f64 {
        tree.iter().map(|&(i, j)| dm.tau(i, j).abs()).sum()
    };
    let chosen_weight = weight(&[(0, 1), (1, 2)]);
    for tree in [
        vec![(0usize, 1usize), (0, 2)],
        vec![(0, 1), (1, 2)],
        vec![(0, 2), (1, 2)],
    ] {
        assert!(chosen_weight >= weight(&tree) - 1e-12);
    }
}

#[test]
fn first_tree_tie_break_is_lexicographic() {
    let dm = DependenceMatrix::new(&[
        vec![1.0, 0.5, 0.5],
        vec![0.5, 1.0, 0.5],
        vec![0.5, 0.5, 1.0],
    ])
    .unwrap();
    assert_eq!(fit_first_tree(&dm), vec![(1, 2), (1, 3)]);
}

#[test]
fn first_tree_d2() {
    let dm = DependenceMatrix::new(&[vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap();
    assert_eq!(fit_first_tree(&dm), vec![(1, 2)]);
}

#[test]
fn first_tree_maximality_on_random_matrices() {
    // Exhaustive comparison over all spanning trees for d <= 6 via
    // Pruefer sequences.
    fn prufer_to_tree(seq: &[usize], d: usize) -> Vec<(usize, usize)> {
        let mut degree = vec![1usize; d];
        for &s in seq {
            degree[s] += 1;
        }
        let mut edges = Vec::new();
        let mut seq = seq.to_vec();
        loop {
            let leaf = (0..d).find(|&v| degree[v] == 1);
            let Some(leaf) = leaf else { break };
            if let Some(&s) = seq.first() {
                edges.push((leaf.min(s), leaf.max(s)));
                degree[leaf] -= 1;
                degree[s] -= 1;
                seq.remove(0);
            } else {
                break;
            }
        }
        let rest: Vec<usize> = (0..d).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        edges
    }

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let d = rng.random_range(3..=6usize);
        let mut rows = vec![vec![0.0; d]; d];
        for i in 0..d {
            rows[i][i] = 1.0;
            for j in 0..i {
                let tau = rng.random_range(-0.9..0.9);
                rows[i][j] = tau;
                rows[j][i] = tau;
            }
        }
        let dm = DependenceMatrix::new(&rows).unwrap();
        let chosen = fit_first_tree(&dm);
        let chosen_weight: f64 = chosen
            .iter()
            .map(|&(a, b)| dm.tau(a as usize - 1, b as usize - 1).abs())
            .sum();

        // Enumerate all d^(d-2) spanning trees.
        let mut seq = vec![0usize; d - 2];
        loop {
            let tree = prufer_to_tree(&seq, d);
            let w: f64 = tree.iter().map(|&(i, j)| dm.tau(i, j).abs()).sum();
            assert!(
                chosen_weight >= w - 1e-12,
                "found heavier tree {tree:?} ({w}) than chosen ({chosen_weight})"
            );
            // Advance the sequence.
            let mut pos = 0;
            loop {
                if pos == d - 2 {
                    break;
                }
                seq[pos] += 1;
                if seq[pos] < d {
                    break;
                }
                seq[pos] = 0;
                pos += 1;
            }
            if pos == d - 2 {
                break;
            }
        }
    }
}

#[test]
fn independence_statistic_examples() {
    // tau = 0.5 at n = 1000: statistic around 23.7, clearly dependent.
    let s = tau_independence_statistic(0.5, 1000);
    assert!((s - 23.7).abs() < 0.1, "statistic {s}");
    assert!(s > norm_quantile(0.975));

    // tau = 0.02 at n = 100: statistic around 0.30, not significant.
    let s = tau_independence_statistic(0.02, 100);
    assert!((s - 0.295).abs() < 0.01, "statistic {s}");
    assert!(s < norm_quantile(0.975));

    assert_eq!(tau_independence_statistic(0.0, 500), 0.0);
}

#[test]
fn independence_filter_on_sampled_data() {
    let truth = BivariateCopula::new(Family::Gaussian, Some(0.5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for _ in 0..1000 {
        let u: f64 = rng.random_range(1e-6..1.0);
        let w: f64 = rng.random_range(1e-6..1.0);
        xs.push(u);
        ys.push(truth.h_inverse(w, u).unwrap());
    }
    assert!(!independence_filter(&xs, &ys, 0.05).unwrap());

    let zs: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
    let ws: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
    assert!(independence_filter(&zs, &ws, 0.05).unwrap());
}

fn dvine_gaussian_model(d: usize, level1: f64, level2: f64) -> VineModel {
    let s = CherryVineStructure::dvine(d).unwrap();
    let assignments: Vec<(EdgeLabel, BivariateCopula)> = s
        .edge_labels()
        .into_iter()
        .map(|l| {
            let rho = match l.cond.len() {
                0 => level1,
                1 => level2,
                _ => 0.0,
            };
            (l, BivariateCopula::new(Family::Gaussian, Some(rho)).unwrap())
        })
        .collect();
    VineModel::new(s, assignments).unwrap()
}

#[test]
fn greedy_cherry_tree_d3_is_forced() {
    let truth = dvine_gaussian_model(3, 0.6, 0.3);
    let rows = truth.sample(400, 50).unwrap();
    let po = PseudoObservations::from_rows(&rows).unwrap();
    let tree = greedy_cherry_tree(&po, 2, &[Family::Gaussian], FitOptions::default()).unwrap();
    assert_eq!(tree.order(), 2);
    // d = 3 has a single possible third-order cluster; growing once more
    // must produce it.
    let mut fitter = VineFitter::new(&po, &[Family::Gaussian], FitOptions::default()).unwrap();
    fitter.grow_level().unwrap();
    // Level 2 done; there is no level 3 tree for d = 3 (T_2 is the last),
    // so the model assembles directly.
    let model = fitter.into_model(2).unwrap();
    assert_eq!(model.d(), 3);
}

#[test]
fn greedy_cherry_tree_prefers_stronger_conditioned_pair() {
    // C-vine truth on 4 variables rooted at 1: the (2,3|1) dependence is
    // much stronger than (3,4|1), so the greedy level-2 tree must link the
    // {1,2},{1,3} pair and the {1,2},{1,4} pair (labels (2,3|1), (2,4|1)).
    let s = CherryVineStructure::cvine(4).unwrap();
    let assignments: Vec<(EdgeLabel, BivariateCopula)> = s
        .edge_labels()
        .into_iter()
        .map(|l| {
            let rho = match (l.a, l.b, l.cond.len()) {
                (_, _, 0) => 0.7,
                (2, 3, 1) => 0.6,
                (2, 4, 1) => 0.45,
                _ => 0.0,
            };
            (l, BivariateCopula::new(Family::Gaussian, Some(rho)).unwrap())
        })
        .collect();
    let truth = VineModel::new(s, assignments).unwrap();
    let rows = truth.sample(3000, 60).unwrap();
    let po = PseudoObservations::from_rows(&rows).unwrap();

    let mut fitter = VineFitter::with_first_tree(
        &po,
        &[(1, 2), (1, 3), (1, 4)],
        &[Family::Gaussian],
        FitOptions::default(),
    )
    .unwrap();
    let tree = fitter.grow_level().unwrap();
    let mut labels: Vec<(u32, u32)> = tree
        .tree_edges()
        .iter()
        .map(|e| {
            let ki = &tree.clusters()[e.i];
            let kj = &tree.clusters()[e.j];
            let s = ki.intersection(kj);
            let a = ki.difference(&s).only().unwrap();
            let b = kj.difference(&s).only().unwrap();
            (a.min(b), a.max(b))
        })
        .collect();
    labels.sort_unstable();
    assert_eq!(labels, vec![(2, 3), (2, 4)]);
}

#[test]
fn fit_full_vine_recovers_gaussian_loglik() {
    let truth = dvine_gaussian_model(3, 0.6, 0.35);
    let rows = truth.sample(2000, 70).unwrap();
    let po = PseudoObservations::from_rows(&rows).unwrap();
    let fitted = fit_truncated_vine(&po, 2, &[Family::Gaussian], FitOptions::default()).unwrap();
    let ll_true = crate::assess::log_likelihood(&truth, &po).unwrap();
    let ll_fit = crate::assess::log_likelihood(&fitted, &po).unwrap();
    assert!(
        (ll_fit - ll_true).abs() <= 0.02 * ll_true.abs(),
        "fitted {ll_fit} vs true {ll_true}"
    );
}

#[test]
fn fit_truncated_level1_counts() {
    let truth = dvine_gaussian_model(5, 0.6, 0.0);
    let rows = truth.sample(500, 80).unwrap();
    let po = PseudoObservations::from_rows(&rows).unwrap();
    let fitted = fit_truncated_vine(&po, 1, &[Family::Gaussian], FitOptions::default()).unwrap();
    assert_eq!(fitted.dependent_link_count(), 4);
    assert_eq!(fitted.structure().link_count(), 10);
}

#[test]
fn deeper_truncation_does_not_hurt_held_out_loglik() {
    let truth = dvine_gaussian_model(5, 0.6, 0.4);
    let truth = truth.truncate(2).unwrap();
    let train_rows = truth.sample(2000, 90).unwrap();
    let test_rows = truth.sample(2000, 91).unwrap();
    let train = PseudoObservations::from_rows(&train_rows).unwrap();
    let test = PseudoObservations::from_rows(&test_rows).unwrap();

    let pool = [Family::Gaussian];
    let m1 = fit_truncated_vine(&train, 1, &pool, FitOptions::default()).unwrap();
    let m2 = fit_truncated_vine(&train, 2, &pool, FitOptions::default()).unwrap();
    let ll1 = crate::assess::log_likelihood(&m1, &test).unwrap();
    let ll2 = crate::assess::log_likelihood(&m2, &test).unwrap();
    assert!(ll2 >= ll1, "level-2 fit {ll2} worse than level-1 {ll1}");
}

#[test]
fn fitted_link_count_formula() {
    // Level-k truncation admits (d-1) + sum_{j=2..k} (d-j) dependent links.
    let truth = dvine_gaussian_model(5, 0.5, 0.3);
    let rows = truth.sample(800, 95).unwrap();
    let po = PseudoObservations::from_rows(&rows).unwrap();
    for k in 1..=4usize {
        let fitted =
            fit_truncated_vine(&po, k, &[Family::Gaussian], FitOptions::default()).unwrap();
        let expected: usize = (1..=k).map(|j| 5 - j).sum();
        assert!(fitted.dependent_link_count() <= expected);
        let potentially_dependent = fitted
            .pair_copulas()
            .filter(|(l, _)| l.cond.len() < k)
            .count();
        assert_eq!(potentially_dependent, expected);
    }
}

#[test]
fn independence_alpha_prunes_weak_links() {
    let truth = dvine_gaussian_model(4, 0.6, 0.0);
    let rows = truth.sample(1500, 99).unwrap();
    let po = PseudoObservations::from_rows(&rows).unwrap();
    let options = FitOptions {
        method: FitMethod::TauInversion,
        independence_alpha: Some(0.05),
    };
    let fitted = fit_truncated_vine(&po, 3, &[Family::Gaussian], options).unwrap();
    // Level 2 and 3 links of the generator are independent; the filter
    // should keep most of them out.
    let dependent_high_levels = fitted
        .pair_copulas()
        .filter(|(l, c)| !l.cond.is_empty() && !c.is_independence())
        .count();
    assert!(dependent_high_levels <= 1, "got {dependent_high_levels}");
}

#[test]
fn jt_to_cherry_identity_case() {
    let v = VertexSet::standard(4);
    let jt = build_junction_tree(&v, &[vs(&[1, 2, 3]), vs(&[2, 3, 4])]).unwrap();
    let ct = junction_tree_to_cherry_tree(&jt, 3).unwrap();
    assert_eq!(ct.base(), &jt);
}

#[test]
fn jt_to_cherry_pads_small_clusters() {
    let v = VertexSet::standard(4);
    let jt = build_junction_tree(&v, &[vs(&[1, 2]), vs(&[2, 3, 4])]).unwrap();
    let ct = junction_tree_to_cherry_tree(&jt, 3).unwrap();
    assert!(is_cherry_tree(ct.base(), 3));
    for cluster in jt.clusters() {
        assert!(
            ct.clusters().iter().any(|c| cluster.is_subset(c)),
            "cluster {cluster} not contained"
        );
    }
    // Deterministic output.
    let again = junction_tree_to_cherry_tree(&jt, 3).unwrap();
    assert_eq!(ct, again);
}

#[test]
fn jt_to_cherry_rejects_oversized_clusters() {
    let v = VertexSet::standard(4);
    let jt = build_junction_tree(&v, &[vs(&[1, 2, 3]), vs(&[2, 3, 4])]).unwrap();
    assert!(junction_tree_to_cherry_tree(&jt, 2).is_err());
}

#[test]
fn jt_to_cherry_random_containment() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..100 {
        let d = rng.random_range(3..=10usize);
        let jt = crate::graph::random::random_junction_tree(d, &mut rng);
        let max_cluster = jt.clusters().iter().map(|c| c.len()).max().unwrap();
        let k = max_cluster.max(2).min(d);
        let ct = junction_tree_to_cherry_tree(&jt, k).unwrap();
        assert!(is_cherry_tree(ct.base(), k));
        for cluster in jt.clusters() {
            assert!(ct.clusters().iter().any(|c| cluster.is_subset(c)));
        }
    }
}

#[test]
fn jt_to_cherry_preserves_gaussian_factorization() {
    // A Gaussian density that factorizes over the junction tree must give
    // the same value under the embedding cherry tree.
    let v = VertexSet::standard(5);
    let jt = build_junction_tree(&v, &[vs(&[1, 2]), vs(&[2, 3, 4]), vs(&[4, 5])]).unwrap();
    let source = {
        let mut rows = vec![vec![0.0; 5]; 5];
        let vals = [
            [1.0, 0.5, 0.35, 0.3, 0.2],
            [0.5, 1.0, 0.55, 0.4, 0.25],
            [0.35, 0.55, 1.0, 0.5, 0.3],
            [0.3, 0.4, 0.5, 1.0, 0.45],
            [0.2, 0.25, 0.3, 0.45, 1.0],
        ];
        for i in 0..5 {
            for j in 0..5 {
                rows[i][j] = vals[i][j];
            }
        }
        Matrix::from_rows(&rows).unwrap()
    };
    let combined = gaussian::markov_combine(&jt, &source).unwrap();
    let jm_jt = JunctionTreeCopulaModel::gaussian(jt.clone(), &combined).unwrap();
    let ct = junction_tree_to_cherry_tree(&jt, 3).unwrap();
    let jm_ct = JunctionTreeCopulaModel::gaussian(ct.base().clone(), &combined).unwrap();
    let oracle = gaussian::GaussianCopula::new(combined).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..50 {
        let u: Vec<f64> = (0..5).map(|_| rng.random_range(0.03..0.97)).collect();
        let a = jm_jt.log_density(&u).unwrap();
        let b = jm_ct.log_density(&u).unwrap();
        let c = oracle.log_density(&u).unwrap();
        assert_abs_diff_eq!(a, c, epsilon = 1e-9);
        assert_abs_diff_eq!(b, c, epsilon = 1e-9);
    }
}
