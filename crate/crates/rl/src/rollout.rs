//! Parallel experience collection over an immutable parameter snapshot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use scenred_nn::{critic_value, decode_sequence, encode_prepared, DecodeMode, PolicyParams};

use crate::env::{env_step, EnvInstance};
use crate::experience::Experience;
use crate::reward::RewardConfig;
use crate::RlError;

/// SplitMix64 sub-stream derivation, so each (seed, index) pair owns an
/// independent deterministic stream regardless of thread scheduling.
pub fn derive_seed(seed: u64, idx: u64) -> u64 {
    let mut z = seed ^ idx.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// One sampled episode per instance: encode, sample a k-selection, solve
/// the reduced problem, score. Episodes run in parallel; the result
/// order matches the batch order.
pub fn rollout(
    params: &PolicyParams,
    batch: &[EnvInstance],
    k: usize,
    seed: u64,
    reward_cfg: &RewardConfig,
    node_limit: u64,
) -> Result<Vec<Experience>, RlError> {
    if batch.is_empty() {
        return Err(RlError::InvalidArgument("empty rollout batch".into()));
    }
    batch
        .par_iter()
        .enumerate()
        .map(|(idx, env)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, idx as u64));
            let enc = encode_prepared(&env.prep, params);
            let trace = decode_sequence(&enc, k, DecodeMode::Sample(&mut rng), params)?;
            let value = critic_value(&enc, params);
            let outcome = env_step(&env.inst, &trace.indices, reward_cfg, node_limit)?;
            let reward = outcome.reward;
            let log_prob = trace.log_prob_sum();
            Ok(Experience {
                instance_idx: idx,
                instance_id: env.id.clone(),
                actions: trace.indices,
                log_prob,
                reward,
                value,
                advantage: reward - value,
                ret: reward,
            })
        })
        .collect()
}
