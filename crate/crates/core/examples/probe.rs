use std::time::Instant;
use scenred_core::*;
use scenred_mip::SolveStatus;

fn main() {
    let inst = gen_cflp(5, 10, 30, 1).unwrap();

    // structured k=3 solves vs enumeration oracle
    for idx in [vec![0usize,7,13], vec![2,20,29], vec![5,6,7], vec![1,2,3]] {
        let sel = ReducedSelection::uniform(idx.clone());
        let t = Instant::now();
        let r = solve_ef(&inst, Some(&sel), 500_000).unwrap();
        // oracle: reduced instance enumeration
        let mut red = inst.clone();
        red.scenarios = idx.iter().map(|&i| { let mut s = inst.scenarios[i].clone(); s.prob = 1.0/idx.len() as f64; s }).collect();
        red.optimum = None;
        let exact = solve_ef_enumerated(&red, 500_000).unwrap();
        println!("k=3 {idx:?}: {:?} obj {:.4} (oracle {:.4}) pivots {} nodes {} in {:?}",
            r.status, r.objective, exact.value, r.work.simplex_pivots, r.work.bnb_nodes, t.elapsed());
        assert!(r.status == SolveStatus::Optimal);
        assert!((r.objective - exact.value).abs() < 1e-6);
    }

    // order sensitivity of the work metric
    let a = solve_ef(&inst, Some(&ReducedSelection::uniform(vec![0,7,13])), 500_000).unwrap();
    let b = solve_ef(&inst, Some(&ReducedSelection::uniform(vec![13,0,7])), 500_000).unwrap();
    println!("order work: {:?} vs {:?}; obj diff {:.2e}", a.work, b.work, (a.objective-b.objective).abs());

    // cached optimum timing at smoke scale
    for seed in [1u64, 2, 3] {
        let mut inst = gen_cflp(5, 10, 30, seed).unwrap();
        let t = Instant::now();
        cache_optimum(&mut inst, 500_000).unwrap();
        println!("cache seed {seed}: v*={:.2} in {:?}", inst.optimum.as_ref().unwrap().value, t.elapsed());
        let opt = inst.optimum.as_ref().unwrap().clone();
        let t = Instant::now();
        let (f, _) = evaluate_first_stage(&inst, &opt.x, 500_000).unwrap();
        assert!((f - opt.value).abs() < 1e-6 * opt.value.abs());
        println!("  eval(x*) ok in {:?}", t.elapsed());
    }

    // full-EF structured solve (what NDP-style caching uses)
    let inst2 = gen_cflp(5, 10, 30, 2).unwrap();
    let t = Instant::now();
    let r = solve_ef(&inst2, None, 500_000).unwrap();
    println!("structured full EF: {:?} obj {:.2} nodes {} in {:?}", r.status, r.objective, r.work.bnb_nodes, t.elapsed());

    // small NDP cache timing
    let mut ndp = gen_ndp(2, 2, 2, 4, 7).unwrap();
    let t = Instant::now();
    cache_optimum(&mut ndp, 500_000).unwrap();
    println!("ndp_2_2_2_4 cache: v*={:.2} in {:?}", ndp.optimum.as_ref().unwrap().value, t.elapsed());
}
