//! Knowledge-base triples, translation embeddings and the embedding
//! fallbacks used for entities and pairs missing from the knowledge base.

mod embedding;
mod lookup;
mod store;
mod transe;

pub use embedding::EmbeddingTable;
pub use lookup::{average_word_vector, entity_embedding, pair_relation_embedding, WordSource};
pub use store::{
    corrupt_triple, load_triples, load_triples_mapped, merge_stores, CorruptSide, IdMapping,
    IdTriple, Interner, KnowledgeStore, StoreCounts, Triple,
};
pub use transe::{
    tail_prediction, train_transe, transe_distance, transe_loss_and_grad,
    transe_loss_and_grad_ids, LinkPredictionReport, Norm, TransEConfig, TransEGrad, TransEModel,
};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: {reason}: {content:?}")]
    Malformed {
        line: usize,
        content: String,
        reason: String,
    },
    #[error("triple has an empty field: {0:?}")]
    EmptyField(String),
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("duplicate identifier {0:?}")]
    DuplicateIdentifier(String),
    #[error("degenerate store: {0}")]
    DegenerateStore(String),
    #[error("knowledge store is empty")]
    EmptyStore,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training produced a non-finite loss")]
    NonFiniteLoss,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
