//! The memory network: position-weighted memories, per-layer attention,
//! knowledge fusion, the softmax classifier and its analytic gradients.

mod backward;
mod config;
mod encode;
mod forward;
mod params;

pub use backward::{batch_loss, loss_and_gradients, BatchLoss};
pub use config::{KnowledgeMode, MnmConfig, Variant, MAX_LAYERS};
pub use encode::{attention_records, AttentionRecord, Encoder};
pub use forward::{
    apply_position, attention, forward, layer_step, pool, position_percentage, ForwardTrace,
    LayerTrace, ModelInput, Pooling,
};
pub use params::{AttentionParams, LayerParams, MnmParams};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("empty token sequence")]
    EmptySequence,
    #[error("non-finite value in forward pass")]
    NonFinite,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
