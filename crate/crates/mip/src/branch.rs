//! Best-first branch-and-bound over LP relaxations.
//!
//! Nodes are ordered by parent LP bound (ascending), then depth
//! (descending), then insertion order, so plateaus of equal bounds are
//! explored depth-first. Branching fixes the most fractional integer
//! variable (ties to the lowest index) by bound splitting. A single
//! deterministic rounding dive at the root seeds the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::problem::{MipError, MipProblem, SolveResult, SolveStatus, WorkMetric};
use crate::simplex::{solve_lp, solve_lp_with_bounds};
use crate::{FEAS_TOL, GAP_ABS};

#[derive(Debug, Clone)]
pub struct BnbConfig {
    pub node_limit: u64,
    pub int_tol: f64,
    pub gap_abs: f64,
    /// Optional per-variable branching priorities. Among fractional
    /// integer variables the highest priority class is branched first;
    /// fractionality only breaks ties within a class. Extensive forms set
    /// priority 1 on the first-stage block: fixing it integral is what
    /// moves the relaxation bound, and trees collapse by orders of
    /// magnitude compared to plain most-fractional branching.
    pub priorities: Option<Vec<i32>>,
    /// Known feasible solution used as the starting incumbent.
    pub initial_incumbent: Option<(f64, Vec<f64>)>,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            int_tol: FEAS_TOL,
            gap_abs: GAP_ABS,
            priorities: None,
            initial_incumbent: None,
        }
    }
}

impl BnbConfig {
    pub fn with_node_limit(node_limit: u64) -> Self {
        Self {
            node_limit,
            ..Self::default()
        }
    }
}

/// Solves `p` exactly (within the absolute gap) or stops at `node_limit`
/// processed nodes, returning the incumbent if one exists.
pub fn solve_mip(p: &MipProblem, node_limit: u64) -> Result<SolveResult, MipError> {
    solve_mip_with(p, &BnbConfig::with_node_limit(node_limit))
}

#[derive(Clone, Copy)]
struct BoundChange {
    var: usize,
    lo: f64,
    hi: f64,
}

struct Node {
    bound: f64,
    depth: u32,
    seq: u64,
    changes: Vec<BoundChange>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest element; "greatest" here means the most
    // promising: smallest bound, then deepest, then first inserted.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

pub fn solve_mip_with(p: &MipProblem, cfg: &BnbConfig) -> Result<SolveResult, MipError> {
    p.validate_for_mip()?;
    let ints: Vec<usize> = (0..p.num_vars()).filter(|&j| p.integral[j]).collect();
    if ints.is_empty() {
        return solve_lp(p);
    }

    let mut root_lo: Vec<f64> = p.bounds.iter().map(|b| b.0).collect();
    let mut root_hi: Vec<f64> = p.bounds.iter().map(|b| b.1).collect();
    let mut work = WorkMetric::default();
    for &j in &ints {
        root_lo[j] = (root_lo[j] - cfg.int_tol).ceil();
        root_hi[j] = (root_hi[j] + cfg.int_tol).floor();
        if root_lo[j] > root_hi[j] {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                x: Vec::new(),
                objective: f64::INFINITY,
                work,
            });
        }
    }

    let root = solve_lp_with_bounds(p, &root_lo, &root_hi)?;
    work.add(root.work);
    work.bnb_nodes += 1;
    match root.status {
        SolveStatus::Infeasible => {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                x: Vec::new(),
                objective: f64::INFINITY,
                work,
            })
        }
        SolveStatus::Unbounded => {
            return Ok(SolveResult {
                status: SolveStatus::Unbounded,
                x: Vec::new(),
                objective: f64::NEG_INFINITY,
                work,
            })
        }
        _ => {}
    }

    let mut incumbent: Option<(f64, Vec<f64>)> = cfg
        .initial_incumbent
        .as_ref()
        .map(|(obj, x)| (*obj, x.clone()));
    if let Some(j) = branch_var(&root.x, &ints, cfg) {
        if let Some(dived) = dive(p, &root_lo, &root_hi, &root.x, &ints, cfg, &mut work)? {
            let better = incumbent.as_ref().is_none_or(|(obj, _)| dived.0 < *obj);
            if better {
                incumbent = Some(dived);
            }
        }

        let mut heap: BinaryHeap<Node> = BinaryHeap::new();
        let mut seq: u64 = 0;
        push_children(&mut heap, &mut seq, &[], root.objective, 0, j, root.x[j]);

        let mut lo = vec![0.0; p.num_vars()];
        let mut hi = vec![0.0; p.num_vars()];
        while let Some(node) = heap.pop() {
            if let Some((inc_obj, _)) = &incumbent {
                if node.bound >= inc_obj - cfg.gap_abs {
                    break; // every remaining node is fathomed by bound
                }
            }
            if work.bnb_nodes >= cfg.node_limit {
                let (status, x, objective) = match incumbent {
                    Some((obj, x)) => (SolveStatus::NodeLimit, x, obj),
                    None => (SolveStatus::NodeLimit, Vec::new(), f64::INFINITY),
                };
                return Ok(SolveResult {
                    status,
                    x,
                    objective,
                    work,
                });
            }

            lo.copy_from_slice(&root_lo);
            hi.copy_from_slice(&root_hi);
            for ch in &node.changes {
                lo[ch.var] = lo[ch.var].max(ch.lo);
                hi[ch.var] = hi[ch.var].min(ch.hi);
            }
            let rel = solve_lp_with_bounds(p, &lo, &hi)?;
            work.add(rel.work);
            work.bnb_nodes += 1;
            if rel.status != SolveStatus::Optimal {
                continue;
            }
            if let Some((inc_obj, _)) = &incumbent {
                if rel.objective >= inc_obj - cfg.gap_abs {
                    continue;
                }
            }
            match branch_var(&rel.x, &ints, cfg) {
                None => {
                    let better = incumbent
                        .as_ref()
                        .is_none_or(|(inc_obj, _)| rel.objective < *inc_obj);
                    if better {
                        incumbent = Some((rel.objective, rel.x));
                    }
                }
                Some(j) => {
                    push_children(
                        &mut heap,
                        &mut seq,
                        &node.changes,
                        rel.objective,
                        node.depth + 1,
                        j,
                        rel.x[j],
                    );
                }
            }
        }
    } else {
        incumbent = Some((root.objective, root.x));
    }

    Ok(match incumbent {
        Some((obj, x)) => SolveResult {
            status: SolveStatus::Optimal,
            x,
            objective: obj,
            work,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            x: Vec::new(),
            objective: f64::INFINITY,
            work,
        },
    })
}

fn push_children(
    heap: &mut BinaryHeap<Node>,
    seq: &mut u64,
    parent_changes: &[BoundChange],
    parent_bound: f64,
    depth: u32,
    var: usize,
    value: f64,
) {
    let floor = value.floor();
    for (lo, hi) in [(f64::NEG_INFINITY, floor), (floor + 1.0, f64::INFINITY)] {
        let mut changes = parent_changes.to_vec();
        changes.push(BoundChange { var, lo, hi });
        heap.push(Node {
            bound: parent_bound,
            depth,
            seq: *seq,
            changes,
        });
        *seq += 1;
    }
}

/// Branching variable: the fractional integer variable closest to
/// half-integral (ties to the lowest index), restricted to the highest
/// priority class that still has a fractional member when priorities are
/// configured. Returns `None` when every integer variable is integral
/// within tolerance.
fn branch_var(x: &[f64], ints: &[usize], cfg: &BnbConfig) -> Option<usize> {
    let mut best: Option<(i32, f64, usize)> = None;
    for &j in ints {
        let frac = x[j] - x[j].floor();
        if frac.min(1.0 - frac) <= cfg.int_tol {
            continue;
        }
        let prio = cfg.priorities.as_ref().map_or(0, |p| p[j]);
        let dist = (frac - 0.5).abs();
        let better = match best {
            None => true,
            Some((bp, bd, _)) => prio > bp || (prio == bp && dist < bd),
        };
        if better {
            best = Some((prio, dist, j));
        }
    }
    best.map(|(_, _, j)| j)
}

/// Deterministic incumbent search: first try fixing every integer variable
/// to its rounded LP value in one shot, then plunge by fixing one
/// fractional variable per LP re-solve. A fixing that turns the LP
/// infeasible is retried once at the neighboring integer before the
/// plunge gives up.
fn dive(
    p: &MipProblem,
    root_lo: &[f64],
    root_hi: &[f64],
    root_x: &[f64],
    ints: &[usize],
    cfg: &BnbConfig,
    work: &mut WorkMetric,
) -> Result<Option<(f64, Vec<f64>)>, MipError> {
    let mut lo = root_lo.to_vec();
    let mut hi = root_hi.to_vec();
    for &j in ints {
        let v = root_x[j].round().clamp(root_lo[j], root_hi[j]);
        lo[j] = v;
        hi[j] = v;
    }
    let all = solve_lp_with_bounds(p, &lo, &hi)?;
    work.add(all.work);
    let mut best: Option<(f64, Vec<f64>)> = None;
    if all.status == SolveStatus::Optimal {
        best = Some((all.objective, all.x));
    }

    lo.copy_from_slice(root_lo);
    hi.copy_from_slice(root_hi);
    let choices = |xj: f64, j: usize| {
        let near = xj.round().clamp(root_lo[j], root_hi[j]);
        let far = if near > xj { near - 1.0 } else { near + 1.0 };
        (near, far.clamp(root_lo[j], root_hi[j]))
    };
    let mut pending = branch_var(root_x, ints, cfg).map(|j| (j, choices(root_x[j], j)));
    for _ in 0..(2 * ints.len() + 8) {
        let Some((j, (near, far))) = pending.take() else { break };
        lo[j] = near;
        hi[j] = near;
        let mut rel = solve_lp_with_bounds(p, &lo, &hi)?;
        work.add(rel.work);
        if rel.status != SolveStatus::Optimal && far != near {
            lo[j] = far;
            hi[j] = far;
            rel = solve_lp_with_bounds(p, &lo, &hi)?;
            work.add(rel.work);
        }
        if rel.status != SolveStatus::Optimal {
            break;
        }
        match branch_var(&rel.x, ints, cfg) {
            None => {
                let better = best.as_ref().is_none_or(|(obj, _)| rel.objective < *obj);
                if better {
                    best = Some((rel.objective, rel.x));
                }
                break;
            }
            Some(nj) => {
                pending = Some((nj, (choices(rel.x[nj], nj))));
            }
        }
    }
    Ok(best)
}
