//! Encoder/decoder/critic contracts plus the module's master numerical
//! gate: reverse-mode gradients of the full composite loss against
//! central finite differences.

use ndarray::{arr2, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scenred_core::gen_cflp;
use scenred_graphs::{build_instance_adjacency, build_scenario_subgraph};
use scenred_nn::autodiff::Tape;
use scenred_nn::{
    critic_on_tape, critic_value, decode_on_tape, decode_sequence, decoder_step, encode,
    encode_on_tape, gcn_layer, prepare, read_checkpoint, write_checkpoint, DecodeMode,
    EncodedInstance, NnConfig, PolicyParams, PreparedInstance, TapeDecode,
};

fn tiny_config() -> NnConfig {
    NnConfig {
        in_features: 4,
        hidden_low: 6,
        f1: 5,
        hidden_high: 7,
        f_prime: 8,
        heads: 2,
        critic_hidden: 5,
    }
}

fn prepared_cflp(scenarios: usize, seed: u64) -> PreparedInstance {
    let inst = gen_cflp(2, 3, scenarios, seed).unwrap();
    let graphs: Vec<_> = inst
        .scenarios
        .iter()
        .map(|sc| build_scenario_subgraph(&inst.first, sc))
        .collect();
    let ig = build_instance_adjacency(&inst.scenarios).unwrap();
    prepare(&graphs, &ig).unwrap()
}

#[test]
fn gcn_layer_examples() {
    // isolated node: Anorm = [1], H = [1, 0], W = I
    let anorm = arr2(&[[1.0]]);
    let h = arr2(&[[1.0, 0.0]]);
    let w = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
    let out = gcn_layer(&anorm, &h, &w).unwrap();
    assert!((out[(0, 0)] - 0.7615941559557649).abs() < 1e-12);
    assert!(out[(0, 1)].abs() < 1e-15);

    let wz = Array2::zeros((2, 3));
    let out = gcn_layer(&anorm, &h, &wz).unwrap();
    assert_eq!(out.dim(), (1, 3));
    assert!(out.iter().all(|v| *v == 0.0));

    let anorm2 = arr2(&[[0.5, 0.5], [0.5, 0.5]]);
    let h2 = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
    let out = gcn_layer(&anorm2, &h2, &w).unwrap();
    for v in out.iter() {
        assert!((v - 0.46211715726000974).abs() < 1e-12);
    }

    assert!(gcn_layer(&anorm, &arr2(&[[1.0], [2.0]]), &w).is_err());
}

#[test]
fn encode_single_scenario_mean() {
    let cfg = tiny_config();
    let params = PolicyParams::init(&cfg, 1).unwrap();
    let inst = gen_cflp(2, 3, 1, 9).unwrap();
    let graphs: Vec<_> = inst
        .scenarios
        .iter()
        .map(|sc| build_scenario_subgraph(&inst.first, sc))
        .collect();
    let ig = build_instance_adjacency(&inst.scenarios).unwrap();
    let enc = encode(&graphs, &ig, &params).unwrap();
    assert_eq!(enc.h.nrows(), 1);
    assert_eq!(enc.h.ncols(), cfg.f_prime);
    for j in 0..cfg.f_prime {
        assert!((enc.h[(0, j)] - enc.hbar[(0, j)]).abs() < 1e-15);
    }
}

#[test]
fn encode_permutation_equivariance() {
    let cfg = tiny_config();
    let params = PolicyParams::init(&cfg, 3).unwrap();
    let inst = gen_cflp(2, 3, 3, 21).unwrap();
    let graphs: Vec<_> = inst
        .scenarios
        .iter()
        .map(|sc| build_scenario_subgraph(&inst.first, sc))
        .collect();
    let ig = build_instance_adjacency(&inst.scenarios).unwrap();
    let enc = encode(&graphs, &ig, &params).unwrap();

    let perm = [2usize, 0, 1];
    let graphs_p: Vec<_> = perm.iter().map(|&i| graphs[i].clone()).collect();
    let scen_p: Vec<_> = perm.iter().map(|&i| inst.scenarios[i].clone()).collect();
    let ig_p = build_instance_adjacency(&scen_p).unwrap();
    let enc_p = encode(&graphs_p, &ig_p, &params).unwrap();

    for (pi, &i) in perm.iter().enumerate() {
        for j in 0..cfg.f_prime {
            assert!((enc_p.h[(pi, j)] - enc.h[(i, j)]).abs() < 1e-9);
        }
    }
    for j in 0..cfg.f_prime {
        assert!((enc_p.hbar[(0, j)] - enc.hbar[(0, j)]).abs() < 1e-9);
    }
    // critic shares the invariance
    let v = critic_value(&enc, &params);
    let vp = critic_value(&enc_p, &params);
    assert!(v.is_finite());
    assert!((v - vp).abs() < 1e-9);
}

#[test]
fn encode_matches_dense_layer_composition() {
    use scenred_graphs::{normalize_adjacency, standardize_features};
    let cfg = tiny_config();
    let params = PolicyParams::init(&cfg, 5).unwrap();
    let inst = gen_cflp(2, 3, 3, 33).unwrap();
    let graphs: Vec<_> = inst
        .scenarios
        .iter()
        .map(|sc| build_scenario_subgraph(&inst.first, sc))
        .collect();
    let ig = build_instance_adjacency(&inst.scenarios).unwrap();
    let enc = encode(&graphs, &ig, &params).unwrap();

    // dense route: explicit gcn_layer calls and hand pooling
    let feats = standardize_features(&graphs);
    let mut rows = Array2::zeros((3, cfg.f1));
    for (i, g) in graphs.iter().enumerate() {
        let anorm = normalize_adjacency(&g.to_adjacency());
        let h1 = gcn_layer(&anorm, &feats[i], params.get("enc.low.w0")).unwrap();
        let h2 = gcn_layer(&anorm, &h1, params.get("enc.low.w1")).unwrap();
        for j in 0..cfg.f1 {
            let mean: f64 = h2.column(j).sum() / h2.nrows() as f64;
            rows[(i, j)] = mean;
        }
    }
    let anorm_inst = normalize_adjacency(&ig.abs_adjacency());
    let h1 = gcn_layer(&anorm_inst, &rows, params.get("enc.high.w0")).unwrap();
    let h2 = gcn_layer(&anorm_inst, &h1, params.get("enc.high.w1")).unwrap();
    for i in 0..3 {
        for j in 0..cfg.f_prime {
            assert!((enc.h[(i, j)] - h2[(i, j)]).abs() < 1e-12);
        }
    }
}

fn random_encoded(n: usize, f_prime: usize, seed: u64) -> EncodedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = Array2::zeros((n, f_prime));
    for v in h.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let mut hbar = Array2::zeros((1, f_prime));
    for j in 0..f_prime {
        hbar[(0, j)] = h.column(j).sum() / n as f64;
    }
    EncodedInstance { h, hbar }
}

#[test]
fn decoder_step_distribution_contract() {
    let cfg = tiny_config();
    let params = PolicyParams::init(&cfg, 7).unwrap();
    let enc = random_encoded(5, cfg.f_prime, 2);
    let mask = vec![false, true, false, true, false];
    let (probs, ctx) = decoder_step(&enc, None, None, &mask, &params).unwrap();
    let sum: f64 = probs.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert_eq!(probs[(0, 1)], 0.0);
    assert_eq!(probs[(0, 3)], 0.0);
    assert!(probs.iter().all(|&p| p >= 0.0));
    assert_eq!(ctx.dim(), (1, cfg.f_prime));

    // logits are 10*tanh(compatibility), so no odds ratio can exceed e^20
    let unmasked: Vec<f64> = [0usize, 2, 4].iter().map(|&j| probs[(0, j)]).collect();
    let hi = unmasked.iter().fold(0.0_f64, |a, &b| a.max(b));
    let lo = unmasked.iter().fold(1.0_f64, |a: f64, &b| a.min(b));
    assert!(hi / lo <= (20.0_f64).exp() * (1.0 + 1e-9));

    // second step with a previous selection and aux vector
    let prev = enc.h.row(0).to_owned().insert_axis(ndarray::Axis(0));
    let (probs2, _) = decoder_step(&enc, Some(&prev), Some(&ctx), &mask, &params).unwrap();
    assert!((probs2.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    assert!(decoder_step(&enc, None, None, &[true; 5], &params).is_err());
}

#[test]
fn aux_recurrence_is_midpoint() {
    let tape = Tape::new();
    let hc = tape.scalar(2.0);
    let ha = tape.scalar(4.0);
    let next = tape.scale(tape.add(hc, ha), 0.5);
    assert_eq!(tape.scalar_value(next), 3.0);
}

#[test]
fn decode_sequence_contracts() {
    let cfg = tiny_config();
    let params = PolicyParams::init(&cfg, 11).unwrap();

    // single candidate: probability one, log-prob exactly zero
    let enc1 = random_encoded(1, cfg.f_prime, 3);
    let trace = decode_sequence(&enc1, 1, DecodeMode::Greedy, &params).unwrap();
    assert_eq!(trace.indices, vec![0]);
    assert_eq!(trace.log_probs, vec![0.0]);

    let enc = random_encoded(6, cfg.f_prime, 4);
    let g1 = decode_sequence(&enc, 4, DecodeMode::Greedy, &params).unwrap();
    let g2 = decode_sequence(&enc, 4, DecodeMode::Greedy, &params).unwrap();
    assert_eq!(g1, g2);

    let mut r1 = ChaCha8Rng::seed_from_u64(5);
    let mut r2 = ChaCha8Rng::seed_from_u64(5);
    let s1 = decode_sequence(&enc, 4, DecodeMode::Sample(&mut r1), &params).unwrap();
    let s2 = decode_sequence(&enc, 4, DecodeMode::Sample(&mut r2), &params).unwrap();
    assert_eq!(s1, s2);
    for lp in &s1.log_probs {
        assert!(*lp <= 1e-12);
    }

    assert!(decode_sequence(&enc, 7, DecodeMode::Greedy, &params).is_err());
    assert!(decode_sequence(&enc, 0, DecodeMode::Greedy, &params).is_err());
}

#[test]
fn decode_never_repeats() {
    let cfg = tiny_config();
    for seed in 0..20u64 {
        let params = PolicyParams::init(&cfg, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let n = 1 + (seed as usize % 6);
        let k = 1 + (seed as usize % n);
        let enc = random_encoded(n, cfg.f_prime, seed + 100);
        let trace = decode_sequence(&enc, k, DecodeMode::Sample(&mut rng), &params).unwrap();
        let mut seen = vec![false; n];
        for &i in &trace.indices {
            assert!(!seen[i], "repeated index {i}");
            seen[i] = true;
        }
        assert_eq!(trace.indices.len(), k);
    }
}

#[test]
fn critic_affine_degenerate_case() {
    let cfg = tiny_config();
    let mut params = PolicyParams::init(&cfg, 13).unwrap();
    params.get_mut("critic.w2").fill(0.0);
    params.get_mut("critic.b2")[(0, 0)] = 7.5;
    let enc = random_encoded(4, cfg.f_prime, 6);
    let v = critic_value(&enc, &params);
    assert!((v - 7.5).abs() < 1e-12);
}

#[test]
fn checkpoint_round_trips_bit_exact() {
    let cfg = tiny_config();
    let params = PolicyParams::init(&cfg, 17).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&params, "alpha = 0.5\nk = 3", &mut buf).unwrap();
    let (back, echo) = read_checkpoint(buf.as_slice()).unwrap();
    assert_eq!(back, params);
    assert_eq!(echo, "alpha = 0.5\nk = 3\n");
    let mut buf2 = Vec::new();
    write_checkpoint(&back, "alpha = 0.5\nk = 3", &mut buf2).unwrap();
    assert_eq!(buf, buf2);
}

#[test]
fn init_is_seeded_and_bounded() {
    let cfg = tiny_config();
    let a = PolicyParams::init(&cfg, 4).unwrap();
    let b = PolicyParams::init(&cfg, 4).unwrap();
    let c = PolicyParams::init(&cfg, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let w = a.get("dec.wq");
    let bound = 1.0 / ((3 * cfg.f_prime) as f64).sqrt();
    for v in w.iter() {
        assert!(v.abs() <= bound);
    }
}

/// Composite loss: sum of forced-decode log-probs, half the entropy, and
/// the critic value. Differentiates every parameter group at once.
fn composite_loss_and_grads(
    params: &PolicyParams,
    prep: &PreparedInstance,
    actions: &[usize],
) -> (f64, scenred_nn::GradStore) {
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let (h, hbar) = encode_on_tape(&tape, &bound, prep);
    let (_, lps, entropy) = decode_on_tape(
        &tape,
        &bound,
        h,
        hbar,
        actions.len(),
        params.config.heads,
        TapeDecode::Forced(actions.to_vec()),
    )
    .unwrap();
    let value = critic_on_tape(&tape, &bound, h);
    let mut loss = value;
    for lp in lps {
        loss = tape.add(loss, lp);
    }
    loss = tape.add(loss, tape.scale(entropy, 0.5));
    let grads = tape.gradients(loss);
    (tape.scalar_value(loss), bound.collect(&grads, params))
}

fn composite_loss_value(params: &PolicyParams, prep: &PreparedInstance, actions: &[usize]) -> f64 {
    composite_loss_and_grads(params, prep, actions).0
}

#[test]
fn gradients_match_finite_differences() {
    let cfg = tiny_config();
    let prep = prepared_cflp(3, 41);
    let actions = vec![2usize, 0];
    for seed in [1u64, 2] {
        let params = PolicyParams::init(&cfg, seed).unwrap();
        let (_, grads) = composite_loss_and_grads(&params, &prep, &actions);
        let step = 1e-5;
        let mut worst = 0.0_f64;
        for name in params.names().cloned().collect::<Vec<_>>() {
            let shape = params.get(&name).raw_dim();
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    let mut up = params.clone();
                    up.get_mut(&name)[(i, j)] += step;
                    let mut dn = params.clone();
                    dn.get_mut(&name)[(i, j)] -= step;
                    let fd = (composite_loss_value(&up, &prep, &actions)
                        - composite_loss_value(&dn, &prep, &actions))
                        / (2.0 * step);
                    let g = grads[&name][(i, j)];
                    let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-3);
                    worst = worst.max(rel);
                }
            }
        }
        assert!(worst < 1e-4, "max relative gradient error {worst}");
    }
}

#[test]
fn basic_derivatives() {
    // d/dx tanh(x) at 0 is 1
    let tape = Tape::new();
    let x = tape.leaf(arr2(&[[0.0]]));
    let y = tape.tanh(x);
    let grads = tape.gradients(y);
    assert_eq!(tape.grad_of(&grads, x).unwrap()[(0, 0)], 1.0);

    // gradient of a mean over n elements is 1/n each
    let tape = Tape::new();
    let x = tape.leaf(arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]));
    let m = tape.mean_rows(x);
    let s = tape.sum_all(m);
    let grads = tape.gradients(s);
    let gx = tape.grad_of(&grads, x).unwrap();
    for v in gx.iter() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}
