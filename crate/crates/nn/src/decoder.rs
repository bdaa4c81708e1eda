//! Attention decoder that selects k scenarios sequentially.
//!
//! Each step builds a context from the global embedding, the previous
//! selection's embedding, and a running auxiliary vector `h_a` that
//! averages in the previous step's post-attention context
//! (`h_a^t = (h_c^{t-1} + h_a^{t-1}) / 2`, seeded with the first
//! selection's embedding). At step one two copies of the learnable
//! placeholder `v_f` stand in. A multi-head glimpse over the scenario
//! embeddings produces the final query; single-head compatibilities pass
//! through tanh, are scaled to [-10, 10], masked, and softmaxed.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::encoder::EncodedInstance;
use crate::params::{BoundParams, PolicyParams};
use crate::NnError;

/// Ordered selections with their per-step log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub indices: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub entropy_sum: f64,
}

impl DecodeTrace {
    pub fn log_prob_sum(&self) -> f64 {
        self.log_probs.iter().sum()
    }
}

pub enum DecodeMode<'r> {
    Sample(&'r mut ChaCha8Rng),
    Greedy,
}

/// One decoder step on tape variables. Returns the masked probability row
/// and the post-attention context (the `h_c` fed into the recurrence).
pub(crate) fn decoder_step_on_tape(
    tape: &Tape,
    bound: &BoundParams,
    h: Var,
    hbar: Var,
    h_prev: Option<Var>,
    h_aux: Option<Var>,
    mask: &[bool],
    heads: usize,
) -> (Var, Var) {
    let f_prime = tape.shape(h).1;
    let head_dim = f_prime / heads;
    let v_f = bound.var("dec.v_f");
    let context = match (h_prev, h_aux) {
        (Some(prev), Some(aux)) => tape.concat_cols(&[hbar, prev, aux]),
        _ => tape.concat_cols(&[hbar, v_f, v_f]),
    };
    let query = tape.matmul(context, bound.var("dec.wq")); // 1 x F'
    let keys = tape.matmul(h, bound.var("dec.wk")); // N x F'
    let values = tape.matmul(h, bound.var("dec.wv"));

    let mask = Arc::new(mask.to_vec());
    let mut glimpse_parts = Vec::with_capacity(heads);
    let scale = 1.0 / (head_dim as f64).sqrt();
    for head in 0..heads {
        let q_h = tape.col_slice(query, head * head_dim, head_dim);
        let k_h = tape.col_slice(keys, head * head_dim, head_dim);
        let v_h = tape.col_slice(values, head * head_dim, head_dim);
        let compat = tape.scale(tape.matmul(q_h, tape.transpose(k_h)), scale); // 1 x N
        let attn = tape.softmax_row_masked(compat, mask.clone());
        glimpse_parts.push(tape.matmul(attn, v_h)); // 1 x head_dim
    }
    let glimpse = tape.matmul(tape.concat_cols(&glimpse_parts), bound.var("dec.wo"));

    let keys_final = tape.matmul(h, bound.var("dec.wk_final")); // N x F'
    let compat = tape.scale(
        tape.matmul(glimpse, tape.transpose(keys_final)),
        1.0 / (f_prime as f64).sqrt(),
    );
    let logits = tape.scale(tape.tanh(compat), 10.0);
    let probs = tape.softmax_row_masked(logits, mask);
    (probs, glimpse)
}

/// A single decoder step on plain values. `h_prev`/`h_aux` are the
/// embedding of the previous selection and the auxiliary recurrence
/// vector (both absent at t = 1). Returns the probability distribution
/// over scenarios and the context vector entering the next recurrence.
pub fn decoder_step(
    enc: &EncodedInstance,
    h_prev: Option<&Array2<f64>>,
    h_aux: Option<&Array2<f64>>,
    mask: &[bool],
    params: &PolicyParams,
) -> Result<(Array2<f64>, Array2<f64>), NnError> {
    if mask.len() != enc.h.nrows() {
        return Err(NnError::Shape(format!(
            "mask has {} entries for {} scenarios",
            mask.len(),
            enc.h.nrows()
        )));
    }
    if mask.iter().all(|&m| m) {
        return Err(NnError::AllMasked);
    }
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let h = tape.leaf(enc.h.clone());
    let hbar = tape.leaf(enc.hbar.clone());
    let prev = h_prev.map(|m| tape.leaf(m.clone()));
    let aux = h_aux.map(|m| tape.leaf(m.clone()));
    let (probs, ctx) = decoder_step_on_tape(
        &tape,
        &bound,
        h,
        hbar,
        prev,
        aux,
        mask,
        params.config.heads,
    );
    Ok((tape.value(probs), tape.value(ctx)))
}

pub enum TapeDecode<'r> {
    Sample(&'r mut ChaCha8Rng),
    Greedy,
    Forced(Vec<usize>),
}

/// Runs the k-step decode on one tape. Returns chosen indices, per-step
/// log-probability vars, and the summed entropy var.
pub fn decode_on_tape(
    tape: &Tape,
    bound: &BoundParams,
    h: Var,
    hbar: Var,
    k: usize,
    heads: usize,
    mut mode: TapeDecode,
) -> Result<(Vec<usize>, Vec<Var>, Var), NnError> {
    let n = tape.shape(h).0;
    if k == 0 || k > n {
        return Err(NnError::Shape(format!("k = {k} outside 1..={n}")));
    }
    let mut mask = vec![false; n];
    let mut indices = Vec::with_capacity(k);
    let mut log_probs = Vec::with_capacity(k);
    let mut entropy = tape.scalar(0.0);
    let mut h_prev: Option<Var> = None;
    let mut h_aux: Option<Var> = None;

    for t in 0..k {
        let (probs, ctx) =
            decoder_step_on_tape(tape, bound, h, hbar, h_prev, h_aux, &mask, heads);
        let pv = tape.value(probs);
        let choice = match &mut mode {
            TapeDecode::Greedy => {
                let mut best = None;
                let mut best_p = f64::NEG_INFINITY;
                for (j, &m) in mask.iter().enumerate() {
                    if !m && pv[(0, j)] > best_p {
                        best_p = pv[(0, j)];
                        best = Some(j);
                    }
                }
                best.expect("unmasked entry exists")
            }
            TapeDecode::Sample(rng) => {
                let u: f64 = rng.random_range(0.0..1.0);
                let mut acc = 0.0;
                let mut chosen = None;
                for (j, &m) in mask.iter().enumerate() {
                    if m {
                        continue;
                    }
                    acc += pv[(0, j)];
                    if u < acc {
                        chosen = Some(j);
                        break;
                    }
                }
                // numerical slack: fall back to the last unmasked entry
                chosen.unwrap_or_else(|| {
                    mask.iter().rposition(|&m| !m).expect("unmasked entry exists")
                })
            }
            TapeDecode::Forced(actions) => actions[t],
        };
        if mask[choice] {
            return Err(NnError::Shape(format!(
                "forced action {choice} already selected"
            )));
        }
        indices.push(choice);
        log_probs.push(tape.ln_entry(probs, choice));
        entropy = tape.add(entropy, tape.entropy_of_probs(probs));
        mask[choice] = true;

        let chosen_row = tape.row(h, choice);
        h_aux = Some(match h_aux {
            // h_a^{t+1} = (h_c^t + h_a^t) / 2, seeded with h_{pi_1}
            Some(aux) => tape.scale(tape.add(ctx, aux), 0.5),
            None => chosen_row,
        });
        h_prev = Some(chosen_row);
    }
    Ok((indices, log_probs, entropy))
}

/// Decodes k distinct scenarios. `Sample` draws from each step's
/// categorical with the given stream; `Greedy` takes the argmax with
/// lowest-index tie-break.
pub fn decode_sequence(
    enc: &EncodedInstance,
    k: usize,
    mode: DecodeMode,
    params: &PolicyParams,
) -> Result<DecodeTrace, NnError> {
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let h = tape.leaf(enc.h.clone());
    let hbar = tape.leaf(enc.hbar.clone());
    let tape_mode = match mode {
        DecodeMode::Sample(rng) => TapeDecode::Sample(rng),
        DecodeMode::Greedy => TapeDecode::Greedy,
    };
    let (indices, lp_vars, entropy) =
        decode_on_tape(&tape, &bound, h, hbar, k, params.config.heads, tape_mode)?;
    Ok(DecodeTrace {
        indices,
        log_probs: lp_vars.iter().map(|&v| tape.scalar_value(v)).collect(),
        entropy_sum: tape.scalar_value(entropy),
    })
}
