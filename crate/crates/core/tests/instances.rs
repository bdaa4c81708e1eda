//! Generator, extensive-form, and evaluation contracts. The first-stage
//! evaluation is checked against an exhaustive oracle that enumerates
//! every binary (x, y) completion directly from the stored matrices.

use scenred_core::{
    augment_instance, build_extensive_form, cache_optimum, evaluate_first_stage, gen_cflp,
    gen_ndp, read_instance, solve_ef, solve_ef_enumerated, write_instance, ProblemFamily,
    ReducedSelection, SpInstance, VarKind,
};
use scenred_mip::{solve_mip, SolveStatus};

const NODE_LIMIT: u64 = 500_000;

#[test]
fn cflp_ranges_and_counts() {
    let inst = gen_cflp(10, 20, 5, 42).unwrap();
    assert_eq!(inst.n1(), 10);
    assert_eq!(inst.n2(), 20 * 10 + 10);
    assert_eq!(inst.m1(), 1);
    assert_eq!(inst.m2(), 2 * 10 + 2 * 20);
    assert_eq!(inst.meta.family, ProblemFamily::Cflp);
    for &c in &inst.first.c {
        assert!((600.0..=1500.0).contains(&c), "opening cost {c}");
    }
    // capacities appear negated in the T column of each capacity row
    for sc in &inst.scenarios {
        for f in 0..10 {
            let cap = -sc.t[(f, f)];
            assert!((100.0..=150.0).contains(&cap), "capacity {cap}");
        }
    }
    assert_eq!(inst.first.b, vec![8.0]);
    let total: f64 = inst.scenarios.iter().map(|s| s.prob).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn cflp_max_open_clamps_to_facility_count() {
    let inst = gen_cflp(3, 4, 2, 7).unwrap();
    assert_eq!(inst.first.b, vec![3.0]);
}

#[test]
fn generators_are_deterministic() {
    let a = gen_cflp(3, 4, 2, 7).unwrap();
    let b = gen_cflp(3, 4, 2, 7).unwrap();
    assert_eq!(a, b);
    let c = gen_ndp(2, 2, 3, 4, 11).unwrap();
    let d = gen_ndp(2, 2, 3, 4, 11).unwrap();
    assert_eq!(c, d);
    assert_ne!(a, gen_cflp(3, 4, 2, 8).unwrap());
}

#[test]
fn ndp_first_stage_variable_count() {
    // 14 vertices, complete digraph minus source-source and sink-sink arcs.
    let inst = gen_ndp(2, 2, 10, 1, 3).unwrap();
    assert_eq!(inst.n1(), 178);
    assert_eq!(inst.meta.family, ProblemFamily::Ndp);
    for sc in &inst.scenarios {
        let cap_rows = sc.m2() - 178..sc.m2();
        for (row, e) in cap_rows.zip(0..178) {
            let cap = -sc.t[(row, e)];
            assert!((10.0..=41.0).contains(&cap), "capacity {cap}");
        }
    }
    for &c in &inst.first.c {
        assert!((3.0..=11.0).contains(&c));
    }
}

#[test]
fn zero_counts_are_rejected() {
    assert!(gen_cflp(0, 4, 2, 7).is_err());
    assert!(gen_cflp(3, 0, 2, 7).is_err());
    assert!(gen_cflp(3, 4, 0, 7).is_err());
    assert!(gen_ndp(2, 2, 0, 4, 7).is_err());
}

#[test]
fn extensive_form_dimensions() {
    let inst = gen_cflp(4, 6, 5, 9).unwrap();
    let ef = build_extensive_form(&inst, None).unwrap();
    assert_eq!(ef.num_vars(), inst.n1() + 5 * inst.n2());
    assert_eq!(ef.num_rows(), inst.m1() + 5 * inst.m2());

    let sel = ReducedSelection::uniform(vec![3, 1]);
    let ef2 = build_extensive_form(&inst, Some(&sel)).unwrap();
    assert_eq!(ef2.num_vars(), inst.n1() + 2 * inst.n2());
    assert_eq!(ef2.num_rows(), inst.m1() + 2 * inst.m2());
}

#[test]
fn full_selection_equals_no_selection() {
    let inst = gen_cflp(3, 4, 4, 21).unwrap();
    // uniform probabilities: selecting everything with 1/N weights is the
    // same problem
    let sel = ReducedSelection::uniform((0..4).collect());
    let a = build_extensive_form(&inst, None).unwrap();
    let b = build_extensive_form(&inst, Some(&sel)).unwrap();
    assert_eq!(a, b);

    let ra = solve_mip(&a, NODE_LIMIT).unwrap();
    let sel_perm = ReducedSelection::uniform(vec![2, 0, 3, 1]);
    let c = build_extensive_form(&inst, Some(&sel_perm)).unwrap();
    let rc = solve_mip(&c, NODE_LIMIT).unwrap();
    assert_eq!(ra.status, SolveStatus::Optimal);
    assert_eq!(rc.status, SolveStatus::Optimal);
    assert!((ra.objective - rc.objective).abs() < 1e-6);
}

/// Exhaustive oracle over all binary (x, y) completions of a small CFLP,
/// reading the semantics back out of the stored matrices.
fn brute_force_f(inst: &SpInstance, x: &[f64]) -> (f64, Vec<f64>) {
    let nf = inst.n1();
    let nc = (inst.n2() - nf) / nf;
    let mut f: f64 = inst.first.c.iter().zip(x).map(|(c, v)| c * v).sum();
    let mut qs = Vec::new();
    for sc in &inst.scenarios {
        let mut best = f64::INFINITY;
        let combos = 1u32 << (nc * nf);
        'assign: for mask in 0..combos {
            let y = |c: usize, fac: usize| ((mask >> (c * nf + fac)) & 1) as f64;
            for c in 0..nc {
                let presence = sc.h[2 * nf + c];
                let total: f64 = (0..nf).map(|fac| y(c, fac)).sum();
                if (total - presence).abs() > 1e-9 {
                    continue 'assign;
                }
            }
            let mut cost = 0.0;
            for c in 0..nc {
                for fac in 0..nf {
                    cost += sc.q[c * nf + fac] * y(c, fac);
                }
            }
            let mut ok = true;
            for fac in 0..nf {
                let used: f64 = (0..nc).map(|c| sc.w[(fac, c * nf + fac)] * y(c, fac)).sum();
                let cap = -sc.t[(fac, fac)] * x[fac];
                let z = (used - cap).max(0.0);
                let big_m = -sc.t[(nf + fac, fac)];
                if z > big_m * x[fac] + 1e-9 {
                    ok = false;
                    break;
                }
                cost += sc.q[nc * nf + fac] * z;
            }
            if ok && cost < best {
                best = cost;
            }
        }
        qs.push(best);
    }
    for (sc, &q) in inst.scenarios.iter().zip(&qs) {
        f += sc.prob * q;
    }
    (f, qs)
}

#[test]
fn evaluate_first_stage_matches_exhaustive_enumeration() {
    let inst = gen_cflp(2, 3, 2, 5).unwrap();
    for x in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
        let (oracle_f, oracle_q) = brute_force_f(&inst, &x);
        if !oracle_f.is_finite() {
            continue;
        }
        let (f, qs) = evaluate_first_stage(&inst, &x, NODE_LIMIT).unwrap();
        assert!(
            (f - oracle_f).abs() < 1e-6,
            "x {x:?}: solver {f} vs oracle {oracle_f}"
        );
        for (a, b) in qs.iter().zip(&oracle_q) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn evaluate_rejects_infeasible_first_stage() {
    let inst = gen_cflp(2, 3, 2, 5).unwrap();
    assert!(evaluate_first_stage(&inst, &[0.5, 0.0], NODE_LIMIT).is_err());
    assert!(evaluate_first_stage(&inst, &[2.0, 0.0], NODE_LIMIT).is_err());
    assert!(evaluate_first_stage(&inst, &[1.0], NODE_LIMIT).is_err());
}

#[test]
fn cached_optimum_reproduces_under_evaluation() {
    let mut inst = gen_cflp(3, 4, 3, 13).unwrap();
    cache_optimum(&mut inst, NODE_LIMIT).unwrap();
    let opt = inst.optimum.clone().unwrap();
    let (f, _) = evaluate_first_stage(&inst, &opt.x, NODE_LIMIT).unwrap();
    assert!(
        (f - opt.value).abs() <= 1e-6 * opt.value.abs().max(1.0),
        "f {} vs v* {}",
        f,
        opt.value
    );
    // any feasible x is no better than the exact optimum
    let (f1, _) = evaluate_first_stage(&inst, &[1.0, 1.0, 1.0], NODE_LIMIT).unwrap();
    assert!(f1 >= opt.value - 1e-6 * opt.value.abs().max(1.0));
}

#[test]
fn enumeration_agrees_with_monolithic_solve() {
    let inst = gen_cflp(3, 4, 3, 17).unwrap();
    let enumerated = solve_ef_enumerated(&inst, NODE_LIMIT).unwrap();
    let monolithic = solve_ef(&inst, None, NODE_LIMIT).unwrap();
    assert_eq!(monolithic.status, SolveStatus::Optimal);
    assert!(
        (enumerated.value - monolithic.objective).abs() < 1e-6,
        "enumerated {} vs monolithic {}",
        enumerated.value,
        monolithic.objective
    );
}

#[test]
fn ndp_small_instance_solves() {
    let mut inst = gen_ndp(2, 2, 2, 2, 23).unwrap();
    cache_optimum(&mut inst, NODE_LIMIT).unwrap();
    let opt = inst.optimum.clone().unwrap();
    assert!(opt.value.is_finite());
    let (f, _) = evaluate_first_stage(&inst, &opt.x, NODE_LIMIT).unwrap();
    assert!((f - opt.value).abs() <= 1e-6 * opt.value.abs().max(1.0));
}

#[test]
fn augment_identity_and_homogeneity() {
    let mut inst = gen_cflp(2, 3, 2, 5).unwrap();
    inst.optimum = Some(scenred_core::CachedOptimum {
        value: 100.0,
        x: vec![1.0, 0.0],
    });
    let same = augment_instance(&inst, 1.0, 1.0, 9).unwrap();
    assert_eq!(same, inst);

    let doubled = augment_instance(&inst, 2.0, 2.0, 9).unwrap();
    assert_eq!(doubled.optimum.as_ref().unwrap().value, 200.0);
    assert_eq!(doubled.optimum.as_ref().unwrap().x, vec![1.0, 0.0]);
    assert_eq!(doubled.first.c[0], 2.0 * inst.first.c[0]);

    let ranged = augment_instance(&inst, 0.9, 1.1, 9).unwrap();
    let factor = ranged.first.c[0] / inst.first.c[0];
    assert!((0.9..=1.1).contains(&factor));
    assert!(augment_instance(&inst, 0.0, 1.0, 9).is_err());
    assert!(augment_instance(&inst, 1.2, 1.1, 9).is_err());
}

#[test]
fn scaled_instance_optimum_scales() {
    let mut inst = gen_cflp(2, 3, 2, 31).unwrap();
    cache_optimum(&mut inst, NODE_LIMIT).unwrap();
    let scaled = augment_instance(&inst, 2.0, 2.0, 1).unwrap();
    let (f, _) = evaluate_first_stage(&scaled, &scaled.optimum.as_ref().unwrap().x, NODE_LIMIT)
        .unwrap();
    assert!((f - scaled.optimum.as_ref().unwrap().value).abs() < 1e-6 * f.abs().max(1.0));
}

#[test]
fn instance_text_round_trips_bit_exact() {
    let mut inst = gen_cflp(3, 4, 2, 99).unwrap();
    cache_optimum(&mut inst, NODE_LIMIT).unwrap();
    let mut buf = Vec::new();
    write_instance(&inst, &mut buf).unwrap();
    let back = read_instance(buf.as_slice()).unwrap();
    assert_eq!(inst, back);

    let mut buf2 = Vec::new();
    write_instance(&back, &mut buf2).unwrap();
    assert_eq!(buf, buf2);

    // infinities must survive (recourse upper bounds)
    assert!(inst.scenarios[0].y_bounds.last().unwrap().1.is_infinite());
    let ndp = gen_ndp(2, 2, 2, 2, 4).unwrap();
    let mut buf3 = Vec::new();
    write_instance(&ndp, &mut buf3).unwrap();
    assert_eq!(read_instance(buf3.as_slice()).unwrap(), ndp);
}

#[test]
fn selection_validation() {
    let inst = gen_cflp(2, 3, 4, 5).unwrap();
    assert!(ReducedSelection::uniform(vec![0, 2]).validate(4).is_ok());
    assert!(ReducedSelection::uniform(vec![0, 0]).validate(4).is_err());
    assert!(ReducedSelection::uniform(vec![4]).validate(4).is_err());
    assert!(ReducedSelection::uniform(vec![]).validate(4).is_err());
    let full = ReducedSelection::full(&inst);
    assert_eq!(full.indices, vec![0, 1, 2, 3]);
    assert!((full.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn single_scenario_ef_is_the_combined_deterministic_problem() {
    let inst = gen_cflp(2, 3, 1, 5).unwrap();
    let ef = build_extensive_form(&inst, None).unwrap();
    // objective = c then q (weight 1)
    assert_eq!(&ef.objective[..2], &inst.first.c[..]);
    for (a, b) in ef.objective[2..].iter().zip(&inst.scenarios[0].q) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn var_kind_letters_round_trip() {
    for k in [VarKind::Continuous, VarKind::Binary, VarKind::Integer] {
        assert_eq!(VarKind::from_letter(k.letter()), Some(k));
    }
    assert_eq!(VarKind::from_letter('x'), None);
}
