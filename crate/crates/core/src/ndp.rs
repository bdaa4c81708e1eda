//! Network design instances: open directed edges first, route two
//! commodities after demand resolves.
//!
//! The graph is complete and directed except that edges between two
//! sources or between two sinks are excluded. Source `p` supplies
//! commodity `p mod K`; an unmet supply flips a penalized binary flag.
//! Per-scenario rows, in order: intermediate flow conservation as
//! `<=` / `>=` pairs, sink no-outflow, source no-inflow, soft supply, and
//! per-edge capacity.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::model::{
    FirstStage, InstanceMeta, ProblemFamily, Scenario, SpInstance, VarKind,
};

const NUM_COMMODITIES: usize = 2;
const OPEN_COST: (f64, f64) = (3.0, 11.0);
const TRANSPORT_COST: (f64, f64) = (5.0, 11.0);
const CAPACITY: (f64, f64) = (10.0, 41.0);
const SUPPLY: (f64, f64) = (5.0, 15.0);
const UNMET_PENALTY: f64 = 1000.0;

pub fn gen_ndp(
    num_sources: usize,
    num_sinks: usize,
    num_intermediates: usize,
    num_scenarios: usize,
    seed: u64,
) -> Result<SpInstance, CoreError> {
    if num_sources == 0 || num_sinks == 0 || num_intermediates == 0 || num_scenarios == 0 {
        return Err(CoreError::InvalidArgument(
            "counts must all be at least 1".into(),
        ));
    }
    let ns = num_sources;
    let nt = num_sinks;
    let ni = num_intermediates;
    let nv = ns + nt + ni;
    let nk = NUM_COMMODITIES;
    let is_source = |v: usize| v < ns;
    let is_sink = |v: usize| v >= ns && v < ns + nt;

    // Edge list in (tail, head) row-major order.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..nv {
        for j in 0..nv {
            if i == j {
                continue;
            }
            if is_source(i) && is_source(j) {
                continue;
            }
            if is_sink(i) && is_sink(j) {
                continue;
            }
            edges.push((i, j));
        }
    }
    let ne = edges.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let open_cost: Vec<f64> = (0..ne)
        .map(|_| rng.random_range(OPEN_COST.0..OPEN_COST.1))
        .collect();
    let capacity: Vec<f64> = (0..ne)
        .map(|_| rng.random_range(CAPACITY.0..CAPACITY.1))
        .collect();
    let transport: Vec<Vec<f64>> = (0..ne)
        .map(|_| {
            (0..nk)
                .map(|_| rng.random_range(TRANSPORT_COST.0..TRANSPORT_COST.1))
                .collect()
        })
        .collect();

    let n2 = ne * nk + ns * nk;
    let m2 = 2 * ni * nk + nt * nk + ns * nk + ns * nk + ne;
    let y = |e: usize, k: usize| e * nk + k;
    let z = |p: usize, k: usize| ne * nk + p * nk + k;

    let prob = 1.0 / num_scenarios as f64;
    let mut scenarios = Vec::with_capacity(num_scenarios);
    for _ in 0..num_scenarios {
        // supply[p][k]: source p ships commodity p mod K
        let mut supply = vec![vec![0.0; nk]; ns];
        for (p, row) in supply.iter_mut().enumerate() {
            row[p % nk] = rng.random_range(SUPPLY.0..SUPPLY.1);
        }
        let big_m: f64 = supply.iter().flatten().sum();

        let mut q = vec![0.0; n2];
        for e in 0..ne {
            for k in 0..nk {
                q[y(e, k)] = transport[e][k];
            }
        }
        for p in 0..ns {
            for k in 0..nk {
                q[z(p, k)] = UNMET_PENALTY;
            }
        }

        let mut w = Array2::zeros((m2, n2));
        let mut t = Array2::zeros((m2, ne));
        let mut h = vec![0.0; m2];
        let mut row = 0;

        // Conservation at intermediates: outflow - inflow = 0, encoded as a
        // <= / >= pair per (vertex, commodity).
        for v in (ns + nt)..nv {
            for k in 0..nk {
                for (e, &(tail, head)) in edges.iter().enumerate() {
                    let sign = if tail == v {
                        1.0
                    } else if head == v {
                        -1.0
                    } else {
                        continue;
                    };
                    w[(row, y(e, k))] = sign;
                    w[(row + 1, y(e, k))] = -sign;
                }
                row += 2;
            }
        }
        // Sinks ship nothing out.
        for v in ns..(ns + nt) {
            for k in 0..nk {
                for (e, &(tail, _)) in edges.iter().enumerate() {
                    if tail == v {
                        w[(row, y(e, k))] = 1.0;
                    }
                }
                row += 1;
            }
        }
        // Sources receive nothing.
        for p in 0..ns {
            for k in 0..nk {
                for (e, &(_, head)) in edges.iter().enumerate() {
                    if head == p {
                        w[(row, y(e, k))] = 1.0;
                    }
                }
                row += 1;
            }
        }
        // Soft supply: supply[p][k] <= outflow + M z[p][k].
        for p in 0..ns {
            for k in 0..nk {
                for (e, &(tail, _)) in edges.iter().enumerate() {
                    if tail == p {
                        w[(row, y(e, k))] = -1.0;
                    }
                }
                w[(row, z(p, k))] = -big_m;
                h[row] = -supply[p][k];
                row += 1;
            }
        }
        // Edge capacity gated by the opening decision.
        for e in 0..ne {
            for k in 0..nk {
                w[(row, y(e, k))] = 1.0;
            }
            t[(row, e)] = -capacity[e];
            row += 1;
        }
        debug_assert_eq!(row, m2);

        let mut y_kinds = vec![VarKind::Continuous; ne * nk];
        y_kinds.extend(vec![VarKind::Binary; ns * nk]);
        let mut y_bounds = vec![(0.0, f64::INFINITY); ne * nk];
        y_bounds.extend(vec![(0.0, 1.0); ns * nk]);
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
        a: Array2::zeros((0, ne)),
        b: vec![],
        kinds: vec![VarKind::Binary; ne],
        bounds: vec![(0.0, 1.0); ne],
    };

    let inst = SpInstance {
        first,
        scenarios,
        meta: InstanceMeta {
            family: ProblemFamily::Ndp,
            seed,
        },
        optimum: None,
    };
    inst.validate()?;
    Ok(inst)
}
