use ndarray::{arr2, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scenred_core::{gen_cflp, FirstStage, Scenario, VarKind};
use scenred_graphs::{
    build_instance_adjacency, build_scenario_subgraph, dump_graphs, flatten_uncertain,
    normalize_adjacency, standardize_features,
};

fn toy_scenario(q: Vec<f64>, w: Vec<Vec<f64>>, h: Vec<f64>, t: Vec<Vec<f64>>) -> Scenario {
    let n2 = q.len();
    let m2 = h.len();
    let n1 = t.first().map_or(0, |r| r.len());
    let mut wm = Array2::zeros((m2, n2));
    let mut tm = Array2::zeros((m2, n1));
    for i in 0..m2 {
        for j in 0..n2 {
            wm[(i, j)] = w[i][j];
        }
        for j in 0..n1 {
            tm[(i, j)] = t[i][j];
        }
    }
    Scenario {
        prob: 1.0,
        q,
        w: wm,
        h,
        t: tm,
        y_kinds: vec![VarKind::Continuous; n2],
        y_bounds: vec![(0.0, f64::INFINITY); n2],
    }
}

#[test]
fn subgraph_counts_on_cflp() {
    let inst = gen_cflp(10, 20, 1, 3).unwrap();
    let g = build_scenario_subgraph(&inst.first, &inst.scenarios[0]);
    assert_eq!(g.num_vars(), 10 + 210);
    assert_eq!(g.num_cons(), 1 + inst.m2());
    assert_eq!(g.padded_features.nrows(), g.num_nodes());

    // edge count equals the number of nonzeros in [A; T | W]
    let mut nnz = inst.first.a.iter().filter(|v| **v != 0.0).count();
    nnz += inst.scenarios[0].t.iter().filter(|v| **v != 0.0).count();
    nnz += inst.scenarios[0].w.iter().filter(|v| **v != 0.0).count();
    assert_eq!(g.edges.len(), nnz);
}

#[test]
fn parallelism_feature() {
    // first stage empty; scenario objective (1,2), rows x+2y <= 3 and y <= 1
    let fs = FirstStage {
        c: vec![],
        a: Array2::zeros((0, 0)),
        b: vec![],
        kinds: vec![],
        bounds: vec![],
    };
    let sc = toy_scenario(
        vec![1.0, 2.0],
        vec![vec![1.0, 2.0], vec![0.0, 1.0]],
        vec![3.0, 1.0],
        vec![vec![], vec![]],
    );
    let g = build_scenario_subgraph(&fs, &sc);
    assert!((g.cons_features[(0, 0)] - 1.0).abs() < 1e-12);
    assert!((g.cons_features[(1, 0)] - 2.0 / 5.0_f64.sqrt()).abs() < 1e-12);
    assert_eq!(g.cons_features[(0, 1)], 3.0);

    // a row proportional to the objective with a positive factor
    let sc2 = toy_scenario(
        vec![1.0, 2.0],
        vec![vec![7.0, 14.0]],
        vec![5.0],
        vec![vec![]],
    );
    let g2 = build_scenario_subgraph(&fs, &sc2);
    assert!((g2.cons_features[(0, 0)] - 1.0).abs() < 1e-12);
}

#[test]
fn flatten_concatenation_order() {
    let sc = toy_scenario(
        vec![2.0],
        vec![vec![3.0]],
        vec![4.0],
        vec![vec![5.0]],
    );
    assert_eq!(flatten_uncertain(&sc), vec![2.0, 3.0, 4.0, 5.0]);
    assert_eq!(flatten_uncertain(&sc), flatten_uncertain(&sc.clone()));

    let inst = gen_cflp(3, 4, 1, 5).unwrap();
    let sc = &inst.scenarios[0];
    let v = flatten_uncertain(sc);
    let (n1, n2, m2) = (inst.n1(), inst.n2(), inst.m2());
    assert_eq!(v.len(), n2 + m2 * n2 + m2 + m2 * n1);
}

#[test]
fn instance_adjacency_examples() {
    let a = toy_scenario(vec![1.0, 1.0], vec![vec![0.0, 0.0]], vec![0.0], vec![vec![]]);
    let b = toy_scenario(vec![1.0, 0.0], vec![vec![0.0, 0.0]], vec![0.0], vec![vec![]]);
    let ig = build_instance_adjacency(&[a.clone(), b.clone()]).unwrap();
    assert!((ig.adjacency[(0, 1)] - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);
    assert_eq!(ig.adjacency[(0, 0)], 0.0);
    assert_eq!(ig.adjacency[(1, 1)], 0.0);

    let ig2 = build_instance_adjacency(&[a.clone(), a.clone()]).unwrap();
    assert!((ig2.adjacency[(0, 1)] - 1.0).abs() < 1e-12);

    // orthogonal flattened vectors
    let e1 = toy_scenario(vec![1.0, 0.0], vec![vec![0.0, 0.0]], vec![0.0], vec![vec![]]);
    let e2 = toy_scenario(vec![0.0, 1.0], vec![vec![0.0, 0.0]], vec![0.0], vec![vec![]]);
    let ig3 = build_instance_adjacency(&[e1, e2]).unwrap();
    assert!(ig3.adjacency[(0, 1)].abs() < 1e-12);

    // zero-norm vector is an error
    let z = toy_scenario(vec![0.0], vec![vec![0.0]], vec![0.0], vec![vec![]]);
    assert!(build_instance_adjacency(&[z]).is_err());
    assert!(build_instance_adjacency(&[]).is_err());
}

#[test]
fn instance_adjacency_permutation_equivariance() {
    let inst = gen_cflp(3, 4, 4, 12).unwrap();
    let ig = build_instance_adjacency(&inst.scenarios).unwrap();
    let perm = [2usize, 0, 3, 1];
    let permuted: Vec<Scenario> = perm.iter().map(|&i| inst.scenarios[i].clone()).collect();
    let ig_p = build_instance_adjacency(&permuted).unwrap();
    for (pi, &i) in perm.iter().enumerate() {
        for (pj, &j) in perm.iter().enumerate() {
            assert!((ig_p.adjacency[(pi, pj)] - ig.adjacency[(i, j)]).abs() < 1e-15);
        }
    }
}

#[test]
fn normalize_examples() {
    let z = Array2::<f64>::zeros((1, 1));
    let n = normalize_adjacency(&z);
    assert!((n[(0, 0)] - 1.0).abs() < 1e-15);

    let unit = arr2(&[[0.0, 1.0], [1.0, 0.0]]);
    let n = normalize_adjacency(&unit);
    for v in n.iter() {
        assert!((v - 0.5).abs() < 1e-15);
    }

    let w3 = arr2(&[[0.0, 3.0], [3.0, 0.0]]);
    let n = normalize_adjacency(&w3);
    assert!((n[(0, 0)] - 0.25).abs() < 1e-15);
    assert!((n[(0, 1)] - 0.75).abs() < 1e-15);
    assert!((n[(1, 0)] - 0.75).abs() < 1e-15);
    assert!((n[(1, 1)] - 0.25).abs() < 1e-15);
}

#[test]
fn normalize_is_symmetric_with_bounded_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let n = rng.random_range(2..6);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(0.6) {
                    let w: f64 = rng.random_range(0.1..5.0);
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
            }
        }
        let norm = normalize_adjacency(&a);
        for i in 0..n {
            for j in 0..n {
                assert!((norm[(i, j)] - norm[(j, i)]).abs() < 1e-12);
            }
        }
        // power iteration for the spectral radius
        let mut v = vec![1.0; n];
        for _ in 0..200 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[i] += norm[(i, j)] * v[j];
                }
            }
            let nn: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nn < 1e-30 {
                break;
            }
            for x in next.iter_mut() {
                *x /= nn;
            }
            v = next;
        }
        let mut av = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                av[i] += norm[(i, j)] * v[j];
            }
        }
        let lambda: f64 = av
            .iter()
            .zip(&v)
            .map(|(a, b)| a * b)
            .sum::<f64>();
        assert!(lambda.abs() <= 1.0 + 1e-9, "spectral radius {lambda}");
    }
}

#[test]
fn standardization_zscores_columns() {
    let inst = gen_cflp(3, 5, 4, 77).unwrap();
    let graphs: Vec<_> = inst
        .scenarios
        .iter()
        .map(|sc| build_scenario_subgraph(&inst.first, sc))
        .collect();
    let feats = standardize_features(&graphs);
    assert_eq!(feats.len(), graphs.len());
    let total: usize = graphs.iter().map(|g| g.num_nodes()).sum();
    for f in 0..4 {
        let mut mean = 0.0;
        let mut var = 0.0;
        for m in &feats {
            for row in m.rows() {
                mean += row[f];
            }
        }
        mean /= total as f64;
        for m in &feats {
            for row in m.rows() {
                var += (row[f] - mean) * (row[f] - mean);
            }
        }
        var /= total as f64;
        assert!(mean.abs() < 1e-9, "column {f} mean {mean}");
        // columns with spread get unit variance; constant columns pass through
        if var > 1e-12 {
            assert!((var - 1.0).abs() < 1e-6, "column {f} var {var}");
        }
    }
}

#[test]
fn dump_is_deterministic() {
    let inst = gen_cflp(2, 3, 2, 5).unwrap();
    let graphs: Vec<_> = inst
        .scenarios
        .iter()
        .map(|sc| build_scenario_subgraph(&inst.first, sc))
        .collect();
    let ig = build_instance_adjacency(&inst.scenarios).unwrap();
    let d1 = dump_graphs(&graphs, &ig);
    let d2 = dump_graphs(&graphs, &ig);
    assert_eq!(d1, d2);
    assert!(d1.contains("instance_graph 2"));
}
