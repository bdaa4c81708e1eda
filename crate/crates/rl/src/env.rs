//! The single-step environment: an action is an ordered scenario
//! selection; the transition builds and solves the reduced problem; the
//! reward blends solver effort with first-stage consistency.

use scenred_core::{solve_ef, ReducedSelection, SpInstance};
use scenred_graphs::{build_instance_adjacency, build_scenario_subgraph};
use scenred_mip::{SolveStatus, WorkMetric};
use scenred_nn::{prepare, PreparedInstance};

use crate::reward::{compute_match, compute_reward, RewardConfig};
use crate::RlError;

/// An instance together with its prepared hierarchical state, built once
/// and reused across rollouts and update epochs.
#[derive(Debug, Clone)]
pub struct EnvInstance {
    pub inst: SpInstance,
    pub prep: PreparedInstance,
    pub id: String,
}

impl EnvInstance {
    pub fn new(inst: SpInstance) -> Result<Self, RlError> {
        let subgraphs: Vec<_> = inst
            .scenarios
            .iter()
            .map(|sc| build_scenario_subgraph(&inst.first, sc))
            .collect();
        let ig = build_instance_adjacency(&inst.scenarios)?;
        let prep = prepare(&subgraphs, &ig)?;
        let id = inst.id();
        Ok(EnvInstance { inst, prep, id })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStepOutcome {
    pub reward: f64,
    /// First stage of the reduced optimum (empty on failure).
    pub x_tilde: Vec<f64>,
    pub work: WorkMetric,
    pub reduced_objective: f64,
    pub match_score: f64,
    pub node_limit_hit: bool,
    /// No incumbent came back; the reward is the configured penalty.
    pub failed: bool,
}

/// Builds the reduced problem over `actions` in the given order, solves
/// it, and scores the result against the cached optimum.
pub fn env_step(
    inst: &SpInstance,
    actions: &[usize],
    cfg: &RewardConfig,
    node_limit: u64,
) -> Result<EnvStepOutcome, RlError> {
    cfg.validate()?;
    let optimum = inst.optimum.as_ref().ok_or(RlError::MissingOptimum)?;
    let sel = ReducedSelection::uniform(actions.to_vec());
    sel.validate(inst.num_scenarios()).map_err(RlError::Core)?;
    let r = solve_ef(inst, Some(&sel), node_limit)?;
    let node_limit_hit = r.status == SolveStatus::NodeLimit;
    let usable = matches!(r.status, SolveStatus::Optimal) || (node_limit_hit && !r.x.is_empty());
    if !usable {
        return Ok(EnvStepOutcome {
            reward: cfg.penalty,
            x_tilde: Vec::new(),
            work: r.work,
            reduced_objective: f64::INFINITY,
            match_score: f64::NEG_INFINITY,
            node_limit_hit,
            failed: true,
        });
    }
    let x_tilde: Vec<f64> = r.x[..inst.n1()].to_vec();
    let match_score = compute_match(&x_tilde, &optimum.x)?;
    let reward = compute_reward(&r.work, match_score, cfg);
    Ok(EnvStepOutcome {
        reward,
        x_tilde,
        work: r.work,
        reduced_objective: r.objective,
        match_score,
        node_limit_hit,
        failed: false,
    })
}
