mod common;

use fsmf_core::direct::{completion_order, svd_fsmf2_with};
use fsmf_core::generators::{gen_hodlr, gen_kron1, gen_kron2, gen_lu, hadamard, random_hodlr_matrix};
use fsmf_core::iterative::{run_iterative, IterativeConfig, Method};
use fsmf_core::*;
use proptest::prelude::*;

#[test]
fn two_by_two_example_reaches_zero_loss() {
    let s = SupportPair::new(
        SupportMask::from_binary_rows(&[[1u8, 1], [0, 1]]).unwrap(),
        SupportMask::full(2, 2),
    )
    .unwrap();
    let a = DenseMatrix::from_rows(&[[10.0, 0.0], [0.0, 1.0]]).unwrap();
    let f = svd_fsmf2(&a, &s, SolveMode::Strict).unwrap();
    assert!(s.is_feasible(&f));
    assert!(loss(&a, &f).unwrap() < 1e-28);
    let inst = ProblemInstance::new(a, s).unwrap();
    assert!(check_optimality(&inst, &f).unwrap().is_optimal());
}

#[test]
fn strict_mode_refuses_uncertified_supports() {
    let s = gen_lu(3);
    let a = common::gaussian_matrix(&mut common::rng(1), 3, 3);
    match svd_fsmf2(&a, &s, SolveMode::Strict) {
        Err(FsmfError::CertificateMismatch(msg)) => assert!(msg.contains("(1,1,2,2,1)"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
    let f = svd_fsmf2(&a, &s, SolveMode::BestEffort).unwrap();
    assert!(s.is_feasible(&f));
    let inst = ProblemInstance::new(a, s).unwrap();
    assert!(matches!(check_optimality(&inst, &f), Err(FsmfError::CertificateMismatch(_))));
}

#[test]
fn reducible_fixture_matches_reduced_problem() {
    let s = common::reducible_supports();
    let cert = certify(&s);
    let tax = cert.taxonomy(&s).unwrap();
    let mut rng = common::rng(7);
    for _ in 0..20 {
        let a = common::gaussian_matrix(&mut rng, 4, 4);
        let f = svd_fsmf2(&a, &s, SolveMode::Strict).unwrap();
        assert!(s.is_feasible(&f));
        let inst = ProblemInstance::new(a.clone(), s.clone()).unwrap();
        assert!(check_optimality(&inst, &f).unwrap().is_optimal());
        // Only the reduced rectangles contribute to the loss.
        let outside = DenseMatrix::from_fn(4, 4, |i, j| {
            if tax.complete_union.contains(i, j) { 0.0 } else { a[(i, j)] }
        });
        let reduced = svd_fsmf(&outside, &tax.reduced_supports()).unwrap();
        let expect = loss(&outside, &reduced).unwrap();
        let got = loss(&a, &f).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect.max(1.0), "{got} vs {expect}");
        // No random restart does better.
        for seed in 0..5 {
            let mut c = IterativeConfig::new(Method::Palm, 0.0);
            c.seed = seed;
            c.max_iters = 3000;
            let o = run_iterative(&inst, &c).unwrap();
            assert!(got <= o.report.final_loss + 1e-9);
        }
    }
}

#[test]
fn perturbation_breaks_optimality() {
    let s = common::reducible_supports();
    let a = common::gaussian_matrix(&mut common::rng(3), 4, 4);
    let inst = ProblemInstance::new(a.clone(), s.clone()).unwrap();
    let mut f = svd_fsmf2(&a, &s, SolveMode::Strict).unwrap();
    assert!(check_optimality(&inst, &f).unwrap().is_optimal());
    f.x[(0, 1)] += 1e-3;
    assert!(!check_optimality(&inst, &f).unwrap().is_optimal());
    let mut g = svd_fsmf2(&a, &s, SolveMode::Strict).unwrap();
    g.x[(1, 0)] += 1e-3;
    assert!(!check_optimality(&inst, &g).unwrap().is_optimal());
}

#[test]
fn hadamard_is_recovered_exactly() {
    for level in 1..=6 {
        let h = hadamard(level).unwrap();
        for s in [gen_kron1(level).unwrap(), gen_kron2(level).unwrap()] {
            let f = svd_fsmf2(&h, &s, SolveMode::Strict).unwrap();
            assert!(s.is_feasible(&f));
            assert!(loss(&h, &f).unwrap().sqrt() < 1e-12, "level {level}");
        }
    }
}

#[test]
fn random_hodlr_reconstructs() {
    let mut rng = common::rng(11);
    for level in 1..=4 {
        let s = gen_hodlr(level).unwrap();
        let a = random_hodlr_matrix(level, &mut rng).unwrap();
        let f = svd_fsmf2(&a, &s, SolveMode::Strict).unwrap();
        assert!(loss(&a, &f).unwrap() <= 1e-18);
    }
}

#[test]
fn complete_only_supports_complete_exactly_with_telescoping_blocks() {
    // Nested complete classes: a 1x3 strip, a 3x1 strip and a full 3x3 class of rank 3.
    let left = SupportMask::from_pairs(3, 5, [(0, 0), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (2, 2), (0, 3), (1, 3), (2, 3), (0, 4), (1, 4), (2, 4)]).unwrap();
    let right = SupportMask::from_pairs(3, 5, [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (1, 2), (2, 2), (0, 3), (1, 3), (2, 3), (0, 4), (1, 4), (2, 4)]).unwrap();
    let s = SupportPair::new(left, right).unwrap();
    let p = partition_classes(&s);
    assert!(p.classes.iter().all(|c| c.is_complete));
    let b = common::gaussian_matrix(&mut common::rng(5), 3, 3);
    let f = exact_cec_completion(&b, &s).unwrap();
    assert!(loss(&b, &f).unwrap() < 1e-26);
    // Each class reproduces the target on its new cells only.
    let mut covered = SupportMask::empty(3, 3);
    for c in completion_order(&p) {
        let class = &p.classes[c];
        let xp = f.x.select(&(0..3).collect::<Vec<_>>(), &class.members);
        let yp = f.y.select(&(0..3).collect::<Vec<_>>(), &class.members);
        let contrib = xp.matmul_t(&yp).unwrap();
        let rect = class.representative.to_mask(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let fresh = rect.contains(i, j) && !covered.contains(i, j);
                let want = if fresh { b[(i, j)] } else { 0.0 };
                assert!((contrib[(i, j)] - want).abs() < 1e-12);
            }
        }
        covered = SupportMask::from_fn(3, 3, |i, j| covered.contains(i, j) || rect.contains(i, j));
    }
}

#[test]
fn completion_reconstructs_random_complete_instances() {
    use rand::Rng;
    let mut rng = common::rng(41);
    for t in 0..100 {
        let (m, n) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let mut cols: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let rows: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.6)).collect();
            let cs: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
            for _ in 0..rows.len().min(cs.len()) {
                cols.push((rows.clone(), cs.clone()));
            }
        }
        if cols.is_empty() {
            continue;
        }
        let r = cols.len();
        let left = SupportMask::from_fn(m, r, |i, k| cols[k].0.contains(&i));
        let right = SupportMask::from_fn(n, r, |j, k| cols[k].1.contains(&j));
        let s = SupportPair::new(left, right).unwrap();
        let p = partition_classes(&s);
        assert!(p.classes.iter().all(|c| c.is_complete));
        let union = p.complete_union(m, n);
        let g = common::gaussian_matrix(&mut rng, m, n);
        let b = DenseMatrix::from_fn(m, n, |i, j| if union.contains(i, j) { g[(i, j)] } else { 0.0 });
        let f = exact_cec_completion(&b, &s).unwrap();
        assert!(s.is_feasible(&f));
        let err = model::residual(&b, &f).unwrap().frobenius_norm();
        assert!(err <= 1e-9 * b.frobenius_norm().max(f64::MIN_POSITIVE), "instance {t}: {err}");
    }
}

#[test]
fn completion_rejects_targets_outside_the_union() {
    let s = SupportPair::new(
        SupportMask::from_pairs(2, 1, [(0, 0)]).unwrap(),
        SupportMask::full(2, 1),
    )
    .unwrap();
    let b = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 0.0]]).unwrap();
    assert!(matches!(exact_cec_completion(&b, &s), Err(FsmfError::PreconditionViolation(_))));
}

#[test]
fn column_greedy_matches_class_greedy_on_disjoint_classes() {
    let mut rng = common::rng(21);
    for _ in 0..50 {
        let m = 2 + (rand::Rng::random_range(&mut rng, 0..4));
        let n = 2 + (rand::Rng::random_range(&mut rng, 0..4));
        let s = common::random_disjoint_supports(&mut rng, m, n);
        let a = common::gaussian_matrix(&mut rng, m, n);
        let l0 = loss(&a, &greedy_generic(&a, &rank_one_supports(&s)).unwrap()).unwrap();
        let l1 = loss(&a, &svd_fsmf(&a, &s).unwrap()).unwrap();
        assert!((l0 - l1).abs() <= 1e-10 * l1.max(1.0), "{l0} vs {l1}");
    }
}

fn arb_disjoint_instance() -> impl Strategy<Value = (DenseMatrix, SupportPair)> {
    (2usize..=6, 2usize..=6, any::<u64>()).prop_map(|(m, n, seed)| {
        let mut rng = common::rng(seed);
        let s = common::random_disjoint_supports(&mut rng, m, n);
        (common::gaussian_matrix(&mut rng, m, n), s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_output_is_feasible(seed in any::<u64>(), m in 1usize..=5, n in 1usize..=5, r in 1usize..=4) {
        let mut rng = common::rng(seed);
        let s = common::random_supports(&mut rng, m, n, r, 0.6);
        let a = common::gaussian_matrix(&mut rng, m, n);
        let f = svd_fsmf2(&a, &s, SolveMode::BestEffort).unwrap();
        prop_assert!(s.is_feasible(&f));
        let g = svd_fsmf(&a, &s).unwrap();
        prop_assert!(s.is_feasible(&g));
    }

    #[test]
    fn class_order_does_not_matter_for_disjoint_classes((a, s) in arb_disjoint_instance(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let p = partition_classes(&s);
        let mut order: Vec<usize> = (0..p.classes.len()).collect();
        let base = loss(&a, &greedy_classwise(&a, &s, &p, &order).unwrap()).unwrap();
        order.shuffle(&mut common::rng(seed));
        let shuffled = loss(&a, &greedy_classwise(&a, &s, &p, &order).unwrap()).unwrap();
        prop_assert!((base - shuffled).abs() <= 1e-10 * base.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn certified_small_instances_beat_random_restarts(seed in any::<u64>(), m in 1usize..=3, n in 1usize..=3, r in 1usize..=3) {
        let mut rng = common::rng(seed);
        let s = common::random_supports(&mut rng, m, n, r, 0.6);
        let cert = certify(&s);
        prop_assume!(cert.level.is_certified());
        let a = common::gaussian_matrix(&mut rng, m, n);
        let inst = ProblemInstance::new(a.clone(), s.clone()).unwrap();
        let f = svd_fsmf2_with(&a, &s, &cert, SolveMode::Strict).unwrap();
        let direct = loss(&a, &f).unwrap();
        let mut best = f64::INFINITY;
        for restart in 0..200 {
            let mut c = IterativeConfig::new(Method::Palm, 0.0);
            c.seed = restart;
            c.max_iters = 400;
            best = best.min(run_iterative(&inst, &c).unwrap().report.final_loss);
        }
        prop_assert!(direct <= best + 1e-6, "direct {} vs restarts {}", direct, best);
    }
}
