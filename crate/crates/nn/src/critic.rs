//! Critic head: single-head self-attention over the scenario embeddings,
//! mean pooling, and a two-layer perceptron with tanh hidden activation.

use crate::autodiff::{Tape, Var};
use crate::encoder::EncodedInstance;
use crate::params::{BoundParams, PolicyParams};

pub fn critic_on_tape(tape: &Tape, bound: &BoundParams, h: Var) -> Var {
    let f_prime = tape.shape(h).1;
    let q = tape.matmul(h, bound.var("critic.wq"));
    let k = tape.matmul(h, bound.var("critic.wk"));
    let v = tape.matmul(h, bound.var("critic.wv"));
    let scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / (f_prime as f64).sqrt());
    let attn = tape.softmax_rows(scores);
    let mixed = tape.matmul(attn, v);
    let pooled = tape.mean_rows(mixed);
    let hidden = tape.tanh(tape.add_row_broadcast(
        tape.matmul(pooled, bound.var("critic.w1")),
        bound.var("critic.b1"),
    ));
    tape.add_row_broadcast(
        tape.matmul(hidden, bound.var("critic.w2")),
        bound.var("critic.b2"),
    )
}

/// Scalar value estimate for an encoded instance.
pub fn critic_value(enc: &EncodedInstance, params: &PolicyParams) -> f64 {
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let h = tape.leaf(enc.h.clone());
    let out = critic_on_tape(&tape, &bound, h);
    tape.scalar_value(out)
}
