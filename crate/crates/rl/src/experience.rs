/// One single-step episode. With horizon one the return is the reward
/// and the advantage degenerates to `reward - value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    /// Index into the rollout batch (resolves to the instance).
    pub instance_idx: usize,
    pub instance_id: String,
    pub actions: Vec<usize>,
    /// Sum of per-step log-probabilities at collection time.
    pub log_prob: f64,
    pub reward: f64,
    /// Critic estimate at collection time.
    pub value: f64,
    pub advantage: f64,
    pub ret: f64,
}
