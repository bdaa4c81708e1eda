//! Capacitated facility location instances with uncertain customer
//! presence and per-(customer, facility) demand.
//!
//! First stage opens facilities; the second stage assigns present
//! customers and buys recourse capacity at a penalty. Per scenario the
//! rows are, in order: capacity (one per facility), recourse big-M link
//! (one per facility), then the assignment equality of each customer as
//! a `<=` / `>=` pair.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::model::{
    FirstStage, InstanceMeta, ProblemFamily, Scenario, SpInstance, VarKind,
};

const OPEN_COST: (f64, f64) = (600.0, 1500.0);
const CAPACITY: (f64, f64) = (100.0, 150.0);
const COST_FACTOR: (f64, f64) = (5.0, 105.0);
const PRESENCE_PROB: (f64, f64) = (0.8, 0.9);
const DEMAND: (f64, f64) = (20.0, 80.0);
const MAX_OPEN: f64 = 8.0;
const RECOURSE_PENALTY: f64 = 1000.0;

/// Generates a CFLP instance. Variables per scenario are the binary
/// assignments `y[c][f]` (customer-major) followed by the continuous
/// recourse `z[f]`.
pub fn gen_cflp(
    num_facilities: usize,
    num_customers: usize,
    num_scenarios: usize,
    seed: u64,
) -> Result<SpInstance, CoreError> {
    if num_facilities == 0 || num_customers == 0 || num_scenarios == 0 {
        return Err(CoreError::InvalidArgument(
            "counts must all be at least 1".into(),
        ));
    }
    let nf = num_facilities;
    let nc = num_customers;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let fac_pos: Vec<(f64, f64)> = (0..nf)
        .map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect();
    let cust_pos: Vec<(f64, f64)> = (0..nc)
        .map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect();
    let open_cost: Vec<f64> = (0..nf)
        .map(|_| rng.random_range(OPEN_COST.0..OPEN_COST.1))
        .collect();
    let capacity: Vec<f64> = (0..nf)
        .map(|_| rng.random_range(CAPACITY.0..CAPACITY.1))
        .collect();
    let cost_factor = rng.random_range(COST_FACTOR.0..COST_FACTOR.1);
    let presence_prob: Vec<f64> = (0..nc)
        .map(|_| rng.random_range(PRESENCE_PROB.0..PRESENCE_PROB.1))
        .collect();

    let transport: Vec<Vec<f64>> = (0..nc)
        .map(|c| {
            (0..nf)
                .map(|f| {
                    let dx = cust_pos[c].0 - fac_pos[f].0;
                    let dy = cust_pos[c].1 - fac_pos[f].1;
                    (dx * dx + dy * dy).sqrt() * cost_factor
                })
                .collect()
        })
        .collect();

    let n2 = nc * nf + nf;
    let m2 = 2 * nf + 2 * nc;
    let y = |c: usize, f: usize| c * nf + f;
    let z = |f: usize| nc * nf + f;

    let prob = 1.0 / num_scenarios as f64;
    let mut scenarios = Vec::with_capacity(num_scenarios);
    for _ in 0..num_scenarios {
        let presence: Vec<f64> = (0..nc)
            .map(|c| if rng.random_bool(presence_prob[c]) { 1.0 } else { 0.0 })
            .collect();
        let demand: Vec<Vec<f64>> = (0..nc)
            .map(|_| (0..nf).map(|_| rng.random_range(DEMAND.0..DEMAND.1)).collect())
            .collect();

        // Tightest valid big-M: no facility ever needs more recourse than
        // the sum over customers of their worst-case demand.
        let big_m: f64 = (0..nc)
            .map(|c| demand[c].iter().copied().fold(0.0, f64::max))
            .sum();

        let mut q = vec![0.0; n2];
        for c in 0..nc {
            for f in 0..nf {
                q[y(c, f)] = transport[c][f];
            }
        }
        for f in 0..nf {
            q[z(f)] = RECOURSE_PENALTY;
        }

        let mut w = Array2::zeros((m2, n2));
        let mut t = Array2::zeros((m2, nf));
        let mut h = vec![0.0; m2];
        for f in 0..nf {
            // sum_c demand[c][f] y[c][f] - z[f] - capacity[f] x[f] <= 0
            for c in 0..nc {
                w[(f, y(c, f))] = demand[c][f];
            }
            w[(f, z(f))] = -1.0;
            t[(f, f)] = -capacity[f];
            // z[f] - M x[f] <= 0
            w[(nf + f, z(f))] = 1.0;
            t[(nf + f, f)] = -big_m;
        }
        for c in 0..nc {
            let le_row = 2 * nf + c;
            let ge_row = 2 * nf + nc + c;
            for f in 0..nf {
                w[(le_row, y(c, f))] = 1.0;
                w[(ge_row, y(c, f))] = -1.0;
            }
            h[le_row] = presence[c];
            h[ge_row] = -presence[c];
        }

        let mut y_kinds = vec![VarKind::Binary; nc * nf];
        y_kinds.extend(vec![VarKind::Continuous; nf]);
        let mut y_bounds = vec![(0.0, 1.0); nc * nf];
        y_bounds.extend(vec![(0.0, f64::INFINITY); nf]);
        scenarios.push(Scenario {
            prob,
            q,
            w,
            h,
            t,
            y_kinds,
            y_bounds,
        });
    }

    let first = FirstStage {
        c: open_cost,
        a: Array2::ones((1, nf)),
        b: vec![MAX_OPEN.min(nf as f64)],
        kinds: vec![VarKind::Binary; nf],
        bounds: vec![(0.0, 1.0); nf],
    };

    let inst = SpInstance {
        first,
        scenarios,
        meta: InstanceMeta {
            family: ProblemFamily::Cflp,
            seed,
        },
        optimum: None,
    };
    inst.validate()?;
    Ok(inst)
}
