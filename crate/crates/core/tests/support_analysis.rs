mod common;

use fsmf_core::generators::{gen_full, gen_hodlr, gen_kron1, gen_kron2, gen_lu, unattained_lu_instance};
use fsmf_core::reduction::mcp_to_fsmf;
use fsmf_core::support::{cec_full_rank, outside_supports};
use fsmf_core::*;
use proptest::prelude::*;

fn example_4_10() -> (ProblemInstance, FactorPair) {
    let i = SupportMask::from_binary_rows(&[[1u8, 1], [0, 1]]).unwrap();
    let j = SupportMask::full(2, 2);
    let a = DenseMatrix::from_rows(&[[10.0, 0.0], [0.0, 1.0]]).unwrap();
    let inst = ProblemInstance::new(a, SupportPair::new(i, j).unwrap()).unwrap();
    let x0 = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
    let y0 = DenseMatrix::from_rows(&[[0.0, 10.0], [0.0, 0.0]]).unwrap();
    (inst, FactorPair::new(x0, y0).unwrap())
}

#[test]
fn lu_supports_meet_spurious_condition() {
    for n in [2, 3, 5] {
        let c = certify(&gen_lu(n));
        assert_eq!(c.level, TractabilityLevel::Unknown, "n = {n}");
        assert_eq!(c.spurious_witness.unwrap().one_based(), (1, 1, 2, 2, 1));
        assert_eq!(c.summary(), "Unknown; spurious condition met at (1,1,2,2,1)");
    }
}

#[test]
fn full_supports_form_a_single_class() {
    let c = certify(&gen_full(4, 3, 2));
    assert_eq!(c.level, TractabilityLevel::DisjointClasses);
    assert_eq!(c.partition.classes.len(), 1);
    assert!(!c.partition.classes[0].is_complete);
    assert_eq!(c.summary(), "DisjointClasses (single class)");
    assert!(certify(&gen_full(4, 3, 3)).partition.classes[0].is_complete);
}

#[test]
fn structured_families_are_disjoint() {
    for level in 1..=4 {
        assert_eq!(certify(&gen_hodlr(level).unwrap()).level, TractabilityLevel::DisjointClasses);
        assert_eq!(certify(&gen_kron1(level).unwrap()).level, TractabilityLevel::DisjointClasses);
        assert_eq!(certify(&gen_kron2(level).unwrap()).level, TractabilityLevel::DisjointClasses);
    }
}

#[test]
fn kron_families_are_disjoint_up_to_level_ten() {
    for level in 5..=10 {
        assert_eq!(certify(&gen_kron1(level).unwrap()).level, TractabilityLevel::DisjointClasses);
        assert_eq!(certify(&gen_kron2(level).unwrap()).level, TractabilityLevel::DisjointClasses);
    }
}

#[test]
fn hodlr_rank_one_supports_are_pairwise_disjoint() {
    for level in 1..=6 {
        let s = gen_hodlr(level).unwrap();
        let n = s.m();
        assert_eq!(s.rank(), 3 * n - 2);
        let mut owner = vec![None; n * n];
        for k in 0..s.rank() {
            for &i in s.left().column(k) {
                for &j in s.right().column(k) {
                    assert!(owner[i * n + j].is_none(), "level {level}: cell ({i}, {j}) covered twice");
                    owner[i * n + j] = Some(k);
                }
            }
        }
        assert!(owner.iter().all(|o| o.is_some()));
    }
}

#[test]
fn two_by_two_example_partition_and_rank() {
    let (inst, f0) = example_4_10();
    let cert = certify(inst.supports());
    assert_eq!(cert.partition.complete_columns(), vec![0]);
    assert_eq!(cert.partition.incomplete_columns(), vec![1]);
    assert_eq!(cert.level, TractabilityLevel::ReducibleOutsideCEC);
    let g = masked_gradient(&inst, &f0).unwrap();
    assert_eq!(g.x.max_abs() + g.y.max_abs(), 0.0);
    let rep = cec_full_rank(&inst, &f0, &cert.partition).unwrap();
    assert_eq!(rep.per_class.len(), 1);
    assert_eq!((rep.per_class[0].left_rank, rep.per_class[0].right_rank), (0, 0));
    assert!(!rep.all_full());
    let tax = cert.taxonomy(inst.supports()).unwrap();
    assert_eq!(tax.outside[&1].rows, vec![1]);
    assert_eq!(tax.outside[&1].cols, vec![0, 1]);
}

#[test]
fn reducible_fixture_is_not_disjoint() {
    let s = common::reducible_supports();
    let c = certify(&s);
    assert_eq!(c.partition.complete_columns(), vec![1, 2]);
    assert_eq!(c.level, TractabilityLevel::ReducibleOutsideCEC);
    let tax = c.taxonomy(&s).unwrap();
    assert_eq!((tax.outside[&0].rows.clone(), tax.outside[&0].cols.clone()), (vec![1], vec![0, 1]));
    assert_eq!((tax.outside[&3].rows.clone(), tax.outside[&3].cols.clone()), (vec![3], vec![2, 3]));
    assert!(c.spurious_witness.is_none());
}

#[test]
fn non_rectangular_outside_support_is_reported() {
    let inst = unattained_lu_instance();
    let c = certify(inst.supports());
    assert_eq!(c.level, TractabilityLevel::Unknown);
    assert_eq!(c.spurious_witness.unwrap().one_based(), (2, 2, 1, 1, 2));
    match taxonomy_split(inst.supports(), &c.partition) {
        Err(FsmfError::NonRectangularOutsideSupport { column, indices }) => {
            assert_eq!(column, 1);
            assert_eq!(indices, vec![(0, 1), (1, 0), (1, 1)]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn empty_columns_form_one_complete_class() {
    let left = SupportMask::from_pairs(2, 3, [(0, 0), (1, 1)]).unwrap();
    let right = SupportMask::from_pairs(2, 3, [(0, 0), (0, 2)]).unwrap();
    let p = partition_classes(&SupportPair::new(left, right).unwrap());
    assert_eq!(p.classes.len(), 2);
    assert_eq!(p.classes[1].members, vec![1, 2]);
    assert!(p.classes[1].representative.is_empty());
    assert!(p.classes[1].is_complete);
}

#[test]
fn completion_reduction_on_lu_mask_meets_condition() {
    let w = SupportMask::from_binary_rows(&[[0u8, 1], [1, 1]]).unwrap();
    let red = mcp_to_fsmf(&w);
    let c = certify(&red.supports);
    assert_eq!(c.level, TractabilityLevel::Unknown);
    assert!(c.spurious_condition_met());
}

fn arb_supports() -> impl Strategy<Value = SupportPair> {
    (1usize..=5, 1usize..=5, 1usize..=4, any::<u64>(), 0.2f64..0.9).prop_map(|(m, n, r, seed, d)| {
        common::random_supports(&mut common::rng(seed), m, n, r, d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn partition_is_a_partition(s in arb_supports()) {
        let p = partition_classes(&s);
        let mut seen = vec![0; s.rank()];
        for (ci, c) in p.classes.iter().enumerate() {
            for &k in &c.members {
                seen[k] += 1;
                prop_assert_eq!(p.class_of[k], ci);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let reps = rank_one_supports(&s);
        for k in 0..s.rank() {
            for l in 0..s.rank() {
                let same = reps[k] == reps[l] || (reps[k].is_empty() && reps[l].is_empty());
                prop_assert_eq!(same, p.class_of[k] == p.class_of[l]);
            }
        }
    }

    #[test]
    fn taxonomy_is_a_disjoint_cover(s in arb_supports()) {
        let p = partition_classes(&s);
        if let Ok(t) = taxonomy_split(&s, &p) {
            for (whole, parts) in [
                (s.left(), [&t.i_t, &t.i_reduced, &t.i_rest]),
                (s.right(), [&t.j_t, &t.j_reduced, &t.j_rest]),
            ] {
                prop_assert_eq!(parts.iter().map(|m| m.nnz()).sum::<usize>(), whole.nnz());
                for &(i, k) in whole.entries() {
                    prop_assert_eq!(parts.iter().filter(|m| m.contains(i, k)).count(), 1);
                }
            }
        }
    }

    #[test]
    fn spurious_condition_excludes_certification(s in arb_supports()) {
        let c = certify(&s);
        if c.spurious_condition_met() {
            prop_assert_eq!(c.level, TractabilityLevel::Unknown);
        }
    }

    #[test]
    fn witness_satisfies_membership_conditions(s in arb_supports()) {
        let Some(w) = certify(&s).spurious_witness else { return Ok(()) };
        let r1 = rank_one_supports(&s);
        let owners = |i: usize, j: usize| (0..r1.len()).filter(|&p| r1[p].contains(i, j)).collect::<Vec<_>>();
        prop_assert!(w.i1 != w.i2 && w.j1 != w.j2);
        prop_assert_eq!(owners(w.i1, w.j1), vec![w.k]);
        prop_assert_eq!(owners(w.i1, w.j2), vec![w.k]);
        prop_assert_eq!(owners(w.i2, w.j1), vec![w.k]);
        let shared = owners(w.i2, w.j2);
        prop_assert!(shared.contains(&w.k) && shared.len() >= 2);
    }

    #[test]
    fn disjoint_classes_satisfy_the_weaker_condition(s in arb_supports()) {
        let c = certify(&s);
        if c.level == TractabilityLevel::DisjointClasses {
            let out = outside_supports(&s, &c.partition);
            let rects: Vec<RankOneSupport> = out.values().map(|o| o.rectangle()).collect();
            prop_assert!(out.values().all(|o| o.rectangular));
            for a in &rects {
                for b in &rects {
                    prop_assert!(a == b || !a.intersects(b));
                }
            }
        }
    }

    #[test]
    fn certificate_is_invariant_under_column_permutation(s in arb_supports(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..s.rank()).collect();
        perm.shuffle(&mut common::rng(seed));
        let ps = SupportPair::new(s.left().select_columns(&perm), s.right().select_columns(&perm)).unwrap();
        prop_assert_eq!(certify(&s).level, certify(&ps).level);
    }
}
