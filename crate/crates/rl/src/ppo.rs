//! Clipped-surrogate PPO with a persistent Adam state. Log-probabilities
//! and values are recomputed under the current parameters for every
//! minibatch; gradients of actor, critic, and entropy terms flow through
//! the shared encoder.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use scenred_nn::autodiff::Tape;
use scenred_nn::{
    critic_on_tape, decode_on_tape, encode_on_tape, GradStore, PolicyParams, TapeDecode,
};

use crate::env::EnvInstance;
use crate::experience::Experience;
use crate::RlError;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub clip: f64,
    /// Kept for configuration fidelity; inert at horizon one.
    pub gae_lambda: f64,
    pub vf_coef: f64,
    pub minibatch: usize,
    pub update_epochs: usize,
    /// Rollout batch size per update.
    pub env_count: usize,
    /// Number of rollout/update cycles in a training run.
    pub epochs: usize,
    pub entropy_coef: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            lr_actor: 2.5e-4,
            lr_critic: 2.5e-4,
            clip: 0.2,
            gae_lambda: 0.95,
            vf_coef: 0.5,
            minibatch: 16,
            update_epochs: 10,
            env_count: 32,
            epochs: 10,
            entropy_coef: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        if self.clip <= 0.0 {
            return Err(RlError::InvalidArgument("clip must be positive".into()));
        }
        if self.minibatch == 0 || self.update_epochs == 0 {
            return Err(RlError::InvalidArgument(
                "minibatch and update_epochs must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PpoStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub mean_ratio: f64,
    pub samples: usize,
}

/// Adam moments per named tensor, persistent across updates.
#[derive(Debug, Clone, Default)]
pub struct PpoUpdater {
    m: GradStore,
    v: GradStore,
    t: u64,
}

struct SampleOut {
    grads: GradStore,
    actor: f64,
    critic: f64,
    entropy: f64,
    ratio: f64,
    clipped: bool,
}

fn sample_loss(
    params: &PolicyParams,
    env: &EnvInstance,
    exp: &Experience,
    adv: f64,
    cfg: &PpoConfig,
) -> Result<SampleOut, RlError> {
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let (h, hbar) = encode_on_tape(&tape, &bound, &env.prep);
    let (_, lps, entropy_var) = decode_on_tape(
        &tape,
        &bound,
        h,
        hbar,
        exp.actions.len(),
        params.config.heads,
        TapeDecode::Forced(exp.actions.clone()),
    )?;
    let value = critic_on_tape(&tape, &bound, h);

    let mut lp_new = tape.scalar(0.0);
    for lp in lps {
        lp_new = tape.add(lp_new, lp);
    }
    let ratio = tape.exp(tape.sub(lp_new, tape.scalar(exp.log_prob)));
    let surr1 = tape.scale(ratio, adv);
    let surr2 = tape.scale(tape.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), adv);
    let actor = tape.scale(tape.min(surr1, surr2), -1.0);
    let diff = tape.sub(value, tape.scalar(exp.ret));
    let critic = tape.mul(diff, diff);
    let mut loss = tape.add(actor, tape.scale(critic, cfg.vf_coef));
    loss = tape.sub(loss, tape.scale(entropy_var, cfg.entropy_coef));

    let loss_v = tape.scalar_value(loss);
    if !loss_v.is_finite() {
        return Err(RlError::InvalidArgument("non-finite sample loss".into()));
    }
    let grads = tape.gradients(loss);
    let ratio_v = tape.scalar_value(ratio);
    Ok(SampleOut {
        grads: bound.collect(&grads, params),
        actor: tape.scalar_value(actor),
        critic: tape.scalar_value(critic),
        entropy: tape.scalar_value(entropy_var),
        ratio: ratio_v,
        clipped: (ratio_v - 1.0).abs() > cfg.clip,
    })
}

impl PpoUpdater {
    pub fn new() -> Self {
        PpoUpdater::default()
    }

    fn step(&mut self, params: &mut PolicyParams, grads: &GradStore, cfg: &PpoConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.adam_beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.adam_beta2.powi(self.t as i32);
        for (name, theta) in params.iter_mut() {
            let lr = if name.starts_with("critic.") {
                cfg.lr_critic
            } else {
                cfg.lr_actor
            };
            let g_avg = &grads[name.as_str()];
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(theta.raw_dim()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(theta.raw_dim()));
            for ((t_ij, g_ij), (m_ij, v_ij)) in theta
                .iter_mut()
                .zip(g_avg.iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                let g = g_ij + cfg.weight_decay * *t_ij;
                *m_ij = cfg.adam_beta1 * *m_ij + (1.0 - cfg.adam_beta1) * g;
                *v_ij = cfg.adam_beta2 * *v_ij + (1.0 - cfg.adam_beta2) * g * g;
                let m_hat = *m_ij / bc1;
                let v_hat = *v_ij / bc2;
                *t_ij -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            }
        }
    }

    /// Runs `update_epochs` passes of shuffled minibatches over the
    /// batch, one Adam step per minibatch. Advantages are normalized per
    /// minibatch. Returns aggregate statistics over every sample
    /// processed.
    pub fn update(
        &mut self,
        params: &mut PolicyParams,
        envs: &[EnvInstance],
        batch: &[Experience],
        cfg: &PpoConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<PpoStats, RlError> {
        cfg.validate()?;
        if batch.is_empty() {
            return Err(RlError::InvalidArgument("empty experience batch".into()));
        }
        let mut stats = PpoStats::default();
        let mut order: Vec<usize> = (0..batch.len()).collect();
        for epoch in 0..cfg.update_epochs {
            for i in (1..order.len()).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            for (mb_idx, chunk) in order.chunks(cfg.minibatch).enumerate() {
                let advs: Vec<f64> = chunk.iter().map(|&i| batch[i].advantage).collect();
                let mean = advs.iter().sum::<f64>() / advs.len() as f64;
                let var =
                    advs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / advs.len() as f64;
                let std = var.sqrt();
                let outs: Result<Vec<SampleOut>, RlError> = chunk
                    .par_iter()
                    .zip(advs.par_iter())
                    .map(|(&i, &a)| {
                        let exp = &batch[i];
                        let adv = (a - mean) / (std + 1e-8);
                        sample_loss(params, &envs[exp.instance_idx], exp, adv, cfg)
                    })
                    .collect();
                let outs = outs.map_err(|e| match e {
                    RlError::InvalidArgument(_) => RlError::NonFiniteLoss {
                        epoch,
                        minibatch: mb_idx,
                    },
                    other => other,
                })?;

                let mut grad_avg = GradStore::new();
                let scale = 1.0 / outs.len() as f64;
                for out in &outs {
                    for (name, g) in &out.grads {
                        match grad_avg.get_mut(name) {
                            Some(acc) => *acc += g,
                            None => {
                                grad_avg.insert(name.clone(), g.clone());
                            }
                        }
                    }
                    stats.actor_loss += out.actor;
                    stats.critic_loss += out.critic;
                    stats.entropy += out.entropy;
                    stats.mean_ratio += out.ratio;
                    stats.clip_fraction += if out.clipped { 1.0 } else { 0.0 };
                    stats.samples += 1;
                }
                for g in grad_avg.values_mut() {
                    g.mapv_inplace(|x| x * scale);
                }
                self.step(params, &grad_avg, cfg);
            }
        }
        let n = stats.samples as f64;
        stats.actor_loss /= n;
        stats.critic_loss /= n;
        stats.entropy /= n;
        stats.mean_ratio /= n;
        stats.clip_fraction /= n;
        Ok(stats)
    }
}

/// One-shot update with fresh optimizer state; training loops that carry
/// Adam moments across updates use [`PpoUpdater`] directly.
pub fn ppo_update(
    params: &PolicyParams,
    envs: &[EnvInstance],
    batch: &[Experience],
    cfg: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(PolicyParams, PpoStats), RlError> {
    let mut out = params.clone();
    let mut updater = PpoUpdater::new();
    let stats = updater.update(&mut out, envs, batch, cfg, rng)?;
    Ok((out, stats))
}
