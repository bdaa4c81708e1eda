//! Reward: a weighted blend of the deterministic solve-effort proxy and
//! the first-stage consistency score `r = -(1-alpha) t + alpha M`.

use scenred_mip::WorkMetric;

use crate::RlError;

#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    /// Blend weight, strictly inside (0,1). Larger favors matching the
    /// cached optimal first stage over solve effort.
    pub alpha: f64,
    /// Weight of branch-and-bound nodes against simplex pivots in the
    /// effort proxy.
    pub node_weight: f64,
    /// Unit normalization of the proxy (proxy units per "second").
    pub time_scale: f64,
    /// Reward assigned when the reduced problem yields no incumbent.
    pub penalty: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha: 0.001,
            node_weight: 1.0,
            time_scale: 1000.0,
            penalty: -1000.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(RlError::InvalidArgument(format!(
                "alpha {} must lie strictly inside (0,1)",
                self.alpha
            )));
        }
        if self.node_weight < 0.0 {
            return Err(RlError::InvalidArgument("node_weight negative".into()));
        }
        if self.time_scale <= 0.0 {
            return Err(RlError::InvalidArgument("time_scale not positive".into()));
        }
        Ok(())
    }
}

/// Deterministic time proxy of a solve.
pub fn work_time(work: &WorkMetric, cfg: &RewardConfig) -> f64 {
    work.proxy_seconds(cfg.node_weight, cfg.time_scale)
}

/// Negative Manhattan distance between a reduced-problem first stage and
/// the cached optimal one.
pub fn compute_match(x_tilde: &[f64], x_star: &[f64]) -> Result<f64, RlError> {
    if x_tilde.len() != x_star.len() {
        return Err(RlError::InvalidArgument(format!(
            "first-stage vectors of lengths {} and {}",
            x_tilde.len(),
            x_star.len()
        )));
    }
    Ok(-x_tilde
        .iter()
        .zip(x_star)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>())
}

pub fn compute_reward(work: &WorkMetric, match_score: f64, cfg: &RewardConfig) -> f64 {
    let t = work_time(work, cfg);
    -(1.0 - cfg.alpha) * t + cfg.alpha * match_score
}
