//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line through the harness. Tolerances are pinned in the
//! assertions.

use std::time::Instant;

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cherryvine::assess::{kl_divergence_mc, log_likelihood};
use cherryvine::bicop::{tau_to_param, BivariateCopula, Family, UnitPair};
use cherryvine::gaussian::{vine_from_correlation, GaussianCopula};
use cherryvine::graph::random::random_junction_tree;
use cherryvine::graph::{expand_cherry_tree, is_cherry_tree};
use cherryvine::learn::{fit_truncated_vine, greedy_cherry_tree, FitOptions, PseudoObservations};
use cherryvine::numeric::quad::gauss_legendre;
use cherryvine::numeric::Matrix;
use cherryvine::set::VarSet;
use cherryvine::vine::{CherryVineStructure, EdgeLabel, VineModel};

fn interior_points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d).map(|_| rng.random_range(0.02..0.98)).collect())
        .collect()
}

/// An exchangeable positive-definite correlation structure with decaying
/// off-diagonal entries.
fn decaying_correlation(d: usize) -> Matrix {
    let mut m = Matrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                m[(i, j)] = 0.6f64.powi((i as i32 - j as i32).abs());
            }
        }
    }
    m
}

/// Mixed-family copula assignment cycling through the parametric families.
fn mixed_assignments(structure: &CherryVineStructure) -> Vec<(EdgeLabel, BivariateCopula)> {
    let cycle = [
        BivariateCopula::new(Family::Gaussian, Some(0.5)).unwrap(),
        BivariateCopula::new(Family::Clayton, Some(1.6)).unwrap(),
        BivariateCopula::new(Family::Gumbel, Some(1.6)).unwrap(),
        BivariateCopula::new(Family::Frank, Some(3.0)).unwrap(),
    ];
    structure
        .edge_labels()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, cycle[i % cycle.len()]))
        .collect()
}

/// Criterion 1: in every valid junction tree, each vertex appears in
/// exactly one more cluster than separator edges (1000 random trees,
/// d <= 12, under 5 seconds).
#[test]
fn criterion_01_counting_lemma() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_126_001);
    for _ in 0..1000 {
        let d = rng.random_range(1..=12);
        let jt = random_junction_tree(d, &mut rng);
        for &v in jt.vertices().labels() {
            let (clusters, separator_edges) = jt.containment_counts(v).unwrap();
            assert_eq!(
                clusters,
                separator_edges + 1,
                "vertex {v} violates the counting law"
            );
        }
    }
    assert!(
        start.elapsed().as_secs_f64() < 5.0,
        "criterion 1 exceeded its runtime budget"
    );
}

/// Criterion 2: all-Gaussian vine factorizations (and the junction-tree
/// factorization) match the closed-form Gaussian copula log density within
/// 1e-6 at 100 random interior points, for d = 3, 4, 5, under 10 seconds.
#[test]
fn criterion_02_gaussian_oracle() {
    let start = Instant::now();
    for d in [3usize, 4, 5] {
        let corr = decaying_correlation(d);
        let oracle = GaussianCopula::new(corr.clone()).unwrap();
        for structure in [
            CherryVineStructure::dvine(d).unwrap(),
            CherryVineStructure::cvine(d).unwrap(),
        ] {
            let model = vine_from_correlation(structure, &corr).unwrap();
            for u in interior_points(d, 100, 777 + d as u64) {
                let lhs = model.log_density(&u).unwrap();
                let rhs = oracle.log_density(&u).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-6,
                    "d={d}: vine {lhs} vs closed form {rhs}"
                );
            }
        }
        // The junction-tree factorization route: a Markov-combined matrix
        // on the (d-1)-th order cherry tree of the D-vine structure.
        let structure = CherryVineStructure::dvine(d).unwrap();
        let tree = structure.trees().last().unwrap().base().clone();
        let combined = cherryvine::gaussian::markov_combine(&tree, &corr).unwrap();
        let jm = cherryvine::vine::JunctionTreeCopulaModel::gaussian(tree, &combined).unwrap();
        let oracle = GaussianCopula::new(combined).unwrap();
        for u in interior_points(d, 100, 99 + d as u64) {
            let lhs = jm.log_density(&u).unwrap();
            let rhs = oracle.log_density(&u).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-6,
                "d={d}: junction-tree form {lhs} vs closed form {rhs}"
            );
        }
    }
    assert!(
        start.elapsed().as_secs_f64() < 10.0,
        "criterion 2 exceeded its runtime budget"
    );
}

/// Criterion 3: for mixed-family models on d = 4, 5 and every truncation
/// level k, the truncated vine density equals the (k+1)-th order
/// cherry-tree copula density within 1e-9 at 100 points, under 10 seconds.
#[test]
fn criterion_03_truncation_equivalence() {
    let start = Instant::now();
    for d in [4usize, 5] {
        let structure = CherryVineStructure::dvine(d).unwrap();
        let model = VineModel::new(structure.clone(), mixed_assignments(&structure)).unwrap();
        for k in 1..=(d - 1) {
            let truncated = model.truncate(k).unwrap();
            let jm = truncated.to_cherry_tree_copula(k).unwrap();
            for u in interior_points(d, 100, 555 + (10 * d + k) as u64) {
                let lhs = truncated.log_density(&u).unwrap();
                let rhs = jm.log_density(&u).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-9,
                    "d={d}, k={k}: vine {lhs} vs cherry form {rhs}"
                );
            }
        }
    }
    assert!(
        start.elapsed().as_secs_f64() < 10.0,
        "criterion 3 exceeded its runtime budget"
    );
}

/// Criterion 4: a k-th order cherry-tree copula and its (k+1)-th order
/// lift with independence fills agree pointwise within 1e-9 at 100 points.
#[test]
fn criterion_04_order_lift() {
    let d = 5usize;
    let structure = CherryVineStructure::dvine(d).unwrap();
    let model = VineModel::new(structure.clone(), mixed_assignments(&structure)).unwrap();
    for k in 2..(d - 1) {
        // The model truncated at k-1 is a k-th order cherry-tree copula.
        let base = model.truncate(k - 1).unwrap();
        // Structure sanity: the (k+1)-th tree is the expansion of the k-th.
        let lifted_tree = expand_cherry_tree(&structure.trees()[k - 2]).unwrap();
        assert_eq!(&lifted_tree, &structure.trees()[k - 1]);
        assert!(is_cherry_tree(lifted_tree.base(), k + 1));
        // Its (k+1)-th order cherry form fills the new level with
        // independence copulas.
        let lift = base.to_cherry_tree_copula(k).unwrap();
        assert_eq!(lift.tree().clusters(), lifted_tree.clusters());
        let low = base.to_cherry_tree_copula(k - 1).unwrap();
        for u in interior_points(d, 100, 4_000 + k as u64) {
            let reference = base.log_density(&u).unwrap();
            let lifted = lift.log_density(&u).unwrap();
            let unlifted = low.log_density(&u).unwrap();
            assert!(
                (lifted - reference).abs() <= 1e-9,
                "k={k}: lift {lifted} vs vine {reference}"
            );
            assert!(
                (lifted - unlifted).abs() <= 1e-9,
                "k={k}: lift {lifted} vs k-th order form {unlifted}"
            );
        }
    }
}

/// Criterion 5: the analytic h-function matches central finite differences
/// of the CDF within 1e-5 on a 21x21 interior grid (three parameters per
/// family), and the h-inverse round-trip error stays below 1e-8 on 1000
/// random triples per family.
#[test]
fn criterion_05_h_function_correctness() {
    let fleet: Vec<BivariateCopula> = vec![
        BivariateCopula::Independence,
        BivariateCopula::new(Family::Gaussian, Some(-0.7)).unwrap(),
        BivariateCopula::new(Family::Gaussian, Some(0.3)).unwrap(),
        BivariateCopula::new(Family::Gaussian, Some(0.8)).unwrap(),
        BivariateCopula::new(Family::Clayton, Some(0.5)).unwrap(),
        BivariateCopula::new(Family::Clayton, Some(2.0)).unwrap(),
        BivariateCopula::new(Family::Clayton, Some(5.0)).unwrap(),
        BivariateCopula::new(Family::Gumbel, Some(1.2)).unwrap(),
        BivariateCopula::new(Family::Gumbel, Some(2.0)).unwrap(),
        BivariateCopula::new(Family::Gumbel, Some(4.0)).unwrap(),
        BivariateCopula::new(Family::Frank, Some(-4.0)).unwrap(),
        BivariateCopula::new(Family::Frank, Some(2.0)).unwrap(),
        BivariateCopula::new(Family::Frank, Some(8.0)).unwrap(),
    ];
    let step = 1e-5;
    for copula in &fleet {
        for i in 1..=21 {
            for j in 1..=21 {
                let u = i as f64 / 22.0;
                let v = j as f64 / 22.0;
                let fd = (copula.cdf(UnitPair::new(u, v + step))
                    - copula.cdf(UnitPair::new(u, v - step)))
                    / (2.0 * step);
                let h = copula.h_function(u, v);
                assert!(
                    (fd - h).abs() <= 1e-5,
                    "{:?}({:?}) at ({u},{v}): |h - fd| = {}",
                    copula.family(),
                    copula.parameter(),
                    (fd - h).abs()
                );
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20_126_005);
    for copula in &fleet {
        let mut worst = 0f64;
        for _ in 0..1000 {
            let w = rng.random_range(0.001..0.999);
            let v = rng.random_range(0.001..0.999);
            let u = copula.h_inverse(w, v).unwrap();
            worst = worst.max((copula.h_function(u, v) - w).abs());
        }
        assert!(
            worst <= 1e-8,
            "{:?}({:?}): round-trip error {worst}",
            copula.family(),
            copula.parameter()
        );
    }
}

/// Trapezoid quadrature over the open unit cube: nodes at i/(n+1) with the
/// two boundary strips closed by constant extension (exact for constants).
fn unit_square_quadrature(n: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let h = 1.0 / (n as f64 + 1.0);
    let weight = |i: usize| if i == 1 || i == n { 1.5 * h } else { h };
    let mut total = 0.0;
    for i in 1..=n {
        let u = i as f64 * h;
        let wi = weight(i);
        for j in 1..=n {
            let v = j as f64 * h;
            total += wi * weight(j) * f(u, v);
        }
    }
    total
}

fn unit_cube_quadrature(n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let h = 1.0 / (n as f64 + 1.0);
    let weight = |i: usize| if i == 1 || i == n { 1.5 * h } else { h };
    let mut total = 0.0;
    for i in 1..=n {
        let wi = weight(i);
        for j in 1..=n {
            let wj = weight(j);
            for k in 1..=n {
                let point = [i as f64 * h, j as f64 * h, k as f64 * h];
                total += wi * wj * weight(k) * f(&point);
            }
        }
    }
    total
}

/// Criterion 6: d=2 vine densities integrate to 1 within 1e-3 on a 401^2
/// grid; a d=3 vine density integrates to 1 within 1e-2 on a 101^3 grid.
#[test]
fn criterion_06_normalization() {
    let two_dim: Vec<BivariateCopula> = vec![
        BivariateCopula::Independence,
        BivariateCopula::new(Family::Gaussian, Some(0.5)).unwrap(),
        BivariateCopula::new(Family::Clayton, Some(1.0)).unwrap(),
        BivariateCopula::new(Family::Gumbel, Some(1.5)).unwrap(),
        BivariateCopula::new(Family::Frank, Some(4.0)).unwrap(),
    ];
    for copula in two_dim {
        let structure = CherryVineStructure::dvine(2).unwrap();
        let model = VineModel::new(
            structure,
            vec![(
                EdgeLabel {
                    a: 1,
                    b: 2,
                    cond: VarSet::new(),
                },
                copula,
            )],
        )
        .unwrap();
        let mass = unit_square_quadrature(401, |u, v| model.log_density(&[u, v]).unwrap().exp());
        assert!(
            (mass - 1.0).abs() <= 1e-3,
            "{:?}({:?}): mass {mass}",
            copula.family(),
            copula.parameter()
        );
    }

    let structure = CherryVineStructure::dvine(3).unwrap();
    let model = VineModel::new(structure.clone(), mixed_assignments(&structure)).unwrap();
    let mass = unit_cube_quadrature(101, |u| model.log_density(u).unwrap().exp());
    assert!((mass - 1.0).abs() <= 1e-2, "d=3 mass {mass}");
}

/// Criterion 7: refitting data simulated from a level-2-truncated d=5
/// model recovers each link's dependence within 0.1 on the tau scale and
/// reproduces the generator's held-out log-likelihood within 3 percent.
#[test]
fn criterion_07_simulate_and_refit() {
    let d = 5usize;
    let structure = CherryVineStructure::dvine(d).unwrap();
    let families = [Family::Gaussian, Family::Clayton, Family::Gumbel, Family::Frank];
    let assignments: Vec<(EdgeLabel, BivariateCopula)> = structure
        .edge_labels()
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let copula = match l.cond.len() {
                0 => tau_to_param(families[i % 4], 0.55).unwrap(),
                1 => tau_to_param(families[(i + 1) % 4], 0.12).unwrap(),
                _ => BivariateCopula::Independence,
            };
            (l, copula)
        })
        .collect();
    let generator = VineModel::new(structure, assignments).unwrap();

    let train = generator.sample(2000, 20_126_007).unwrap();
    let held_out = generator.sample(2000, 20_126_008).unwrap();
    let po_train = PseudoObservations::from_rows(&train).unwrap();
    let po_test = PseudoObservations::from_rows(&held_out).unwrap();

    let fitted = fit_truncated_vine(
        &po_train,
        2,
        &[Family::Gaussian, Family::Clayton, Family::Gumbel, Family::Frank],
        FitOptions::default(),
    )
    .unwrap();

    assert_eq!(
        fitted.structure().first_tree(),
        generator.structure().first_tree(),
        "first tree was not recovered"
    );
    for (label, copula) in generator.pair_copulas() {
        if copula.is_independence() {
            continue;
        }
        let fitted_copula = fitted
            .copula_for(&label)
            .unwrap_or_else(|| panic!("fitted model lacks link {label}"));
        let true_tau = copula.param_to_tau();
        let fitted_tau = fitted_copula.param_to_tau();
        assert!(
            (true_tau - fitted_tau).abs() <= 0.1,
            "link {label}: tau {fitted_tau} vs true {true_tau}"
        );
    }

    let ll_generator = log_likelihood(&generator, &po_test).unwrap();
    let ll_fitted = log_likelihood(&fitted, &po_test).unwrap();
    assert!(
        (ll_fitted - ll_generator).abs() <= 0.03 * ll_generator.abs(),
        "held-out loglik {ll_fitted} vs generator {ll_generator}"
    );
}

/// Criterion 8: KL(p, p) is exactly zero with zero spread, and the
/// Monte-Carlo KL between the rho=0.5 and rho=0 Gaussian copulas matches a
/// quadrature oracle within three standard errors at n = 100000.
#[test]
fn criterion_08_kl_sanity() {
    let rho = 0.5f64;
    let structure = CherryVineStructure::dvine(2).unwrap();
    let label = EdgeLabel {
        a: 1,
        b: 2,
        cond: VarSet::new(),
    };
    let p = VineModel::new(
        structure.clone(),
        vec![(
            label.clone(),
            BivariateCopula::new(Family::Gaussian, Some(rho)).unwrap(),
        )],
    )
    .unwrap();
    let q = VineModel::independence(structure);

    let self_kl = kl_divergence_mc(&p, &p, 10_000, 20_126_009).unwrap();
    assert_eq!(self_kl.value, 0.0);
    assert_eq!(self_kl.std_error, 0.0);

    let est = kl_divergence_mc(&p, &q, 100_000, 20_126_010).unwrap();
    // Quadrature oracle for int p log(p/q) via the Gaussian z-space change
    // of variables (q is the independence copula, so log q = 0).
    let copula = BivariateCopula::new(Family::Gaussian, Some(rho)).unwrap();
    let rule = gauss_legendre(80);
    let oracle = rule.integrate(-8.0, 8.0, |z1| {
        rule.integrate(-8.0, 8.0, |z2| {
            let s2 = 1.0 - rho * rho;
            let quad = (z1 * z1 + z2 * z2 - 2.0 * rho * z1 * z2) / s2;
            let pdf = (-0.5 * quad).exp() / (2.0 * std::f64::consts::PI * s2.sqrt());
            let u = cherryvine::numeric::normal::norm_cdf(z1);
            let v = cherryvine::numeric::normal::norm_cdf(z2);
            pdf * copula.log_density(UnitPair::new(u, v))
        })
    });
    assert!(
        (est.value - oracle).abs() <= 3.0 * est.std_error,
        "KL {} vs oracle {oracle} (3 se = {})",
        est.value,
        3.0 * est.std_error
    );
}

/// Criterion 9: the greedy learner recovers the generating third-order
/// cherry tree (strong in-cluster dependence, zero cross-cluster partial
/// correlation) in at least 90 percent of 50 seeded trials.
#[test]
fn criterion_09_structure_recovery() {
    let d = 5usize;
    let structure = CherryVineStructure::dvine(d).unwrap();
    let assignments: Vec<(EdgeLabel, BivariateCopula)> = structure
        .edge_labels()
        .into_iter()
        .map(|l| {
            let rho = match l.cond.len() {
                0 => 0.8,
                1 => 0.25,
                _ => 0.0,
            };
            (
                l,
                BivariateCopula::new(Family::Gaussian, Some(rho)).unwrap(),
            )
        })
        .collect();
    let generator = VineModel::new(structure.clone(), assignments).unwrap();
    let expected: Vec<VarSet> = structure.trees()[1].clusters().to_vec();

    let mut recovered = 0;
    for trial in 0..50u64 {
        let rows = generator.sample(1500, 30_000 + trial).unwrap();
        let po = PseudoObservations::from_rows(&rows).unwrap();
        let tree = greedy_cherry_tree(&po, 3, &[Family::Gaussian], FitOptions::default()).unwrap();
        let mut got: Vec<VarSet> = tree.clusters().to_vec();
        got.sort();
        let mut want = expected.clone();
        want.sort();
        if got == want {
            recovered += 1;
        }
    }
    assert!(
        recovered >= 45,
        "recovered the generating clusters in only {recovered}/50 trials"
    );
}
