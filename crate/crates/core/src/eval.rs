//! Exact evaluation of a fixed first-stage decision against every
//! scenario of an instance.

use scenred_mip::{solve_mip, MipProblem, RowSense, SolveResult, SolveStatus};

use crate::error::CoreError;
use crate::model::{Scenario, SpInstance};

/// Second-stage program of one scenario with the first stage fixed at `x`:
/// `min q.y` subject to `W y <= h - T x`.
pub(crate) fn second_stage_problem(sc: &Scenario, x: &[f64]) -> MipProblem {
    let m2 = sc.m2();
    let mut rhs = sc.h.clone();
    for (i, r) in rhs.iter_mut().enumerate() {
        let tx: f64 = sc.t.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
        *r -= tx;
    }
    MipProblem {
        objective: sc.q.clone(),
        rows: sc.w.clone(),
        rhs,
        senses: vec![RowSense::Le; m2],
        bounds: sc.y_bounds.clone(),
        integral: sc.y_kinds.iter().map(|k| k.is_integral()).collect(),
    }
}

pub(crate) fn solve_second_stage(
    sc: &Scenario,
    x: &[f64],
    node_limit: u64,
) -> Result<SolveResult, CoreError> {
    let p = second_stage_problem(sc, x);
    Ok(solve_mip(&p, node_limit)?)
}

/// Computes `f(x) = c.x + sum_i prob_i Q(x, xi_i)` by solving every
/// scenario's second stage exactly, returning `f` and the per-scenario
/// optimal recourse values.
///
/// `x` must be feasible for the first stage (bounds, integrality, and
/// `A x <= b`, all within 1e-6).
pub fn evaluate_first_stage(
    inst: &SpInstance,
    x: &[f64],
    node_limit: u64,
) -> Result<(f64, Vec<f64>), CoreError> {
    let n1 = inst.n1();
    if x.len() != n1 {
        return Err(CoreError::InvalidArgument(format!(
            "first-stage vector has length {}, expected {n1}",
            x.len()
        )));
    }
    for (j, &v) in x.iter().enumerate() {
        let (lo, hi) = inst.first.bounds[j];
        if v < lo - 1e-6 || v > hi + 1e-6 {
            return Err(CoreError::InvalidArgument(format!(
                "x[{j}] = {v} violates bounds [{lo}, {hi}]"
            )));
        }
        if inst.first.kinds[j].is_integral() && (v - v.round()).abs() > 1e-6 {
            return Err(CoreError::InvalidArgument(format!(
                "x[{j}] = {v} violates integrality"
            )));
        }
    }
    for i in 0..inst.m1() {
        let lhs: f64 = inst.first.a.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
        if lhs > inst.first.b[i] + 1e-6 {
            return Err(CoreError::InvalidArgument(format!(
                "x violates first-stage row {i}"
            )));
        }
    }

    let mut per_scenario = Vec::with_capacity(inst.num_scenarios());
    let mut f: f64 = inst.first.c.iter().zip(x).map(|(c, v)| c * v).sum();
    for (index, sc) in inst.scenarios.iter().enumerate() {
        let r = solve_second_stage(sc, x, node_limit)?;
        match r.status {
            SolveStatus::Optimal => {
                per_scenario.push(r.objective);
                f += sc.prob * r.objective;
            }
            SolveStatus::Infeasible => return Err(CoreError::ScenarioInfeasible { index }),
            other => {
                return Err(CoreError::Unsolved {
                    status: format!("{other:?} in scenario {index}"),
                })
            }
        }
    }
    Ok((f, per_scenario))
}
