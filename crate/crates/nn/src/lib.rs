//! Policy network for scenario selection: a four-layer hierarchical GCN
//! encoder, an attention decoder with a running context recurrence, a
//! self-attention critic, and the small reverse-mode autodiff engine
//! they run on. Gradients are exact and finite-difference checked.

pub mod autodiff;
mod config;
mod critic;
mod decoder;
mod encoder;
mod params;

pub use config::NnConfig;
pub use critic::critic_value;
pub use decoder::{decode_sequence, decoder_step, DecodeMode, DecodeTrace};
pub use encoder::{encode, encode_prepared, gcn_layer, prepare, EncodedInstance, PreparedInstance};
pub use params::{
    read_checkpoint, read_checkpoint_path, write_checkpoint, write_checkpoint_path, BoundParams,
    GradStore, PolicyParams,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("every scenario is masked")]
    AllMasked,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

// Internal surfaces the training crate composes into one loss graph.
pub use critic::critic_on_tape;
pub use decoder::{decode_on_tape, TapeDecode};
pub use encoder::encode_on_tape;
