//! Annotated documents, segmentation, candidate pairs and word vectors.

mod candidates;
mod document;
mod embeddings;
mod tokenize;

pub use candidates::{
    build_context, generate_candidates, passes_distance_rules, read_candidates, write_candidates,
    CandidateInstance, ContextPolicy, ContextToken, Label, GENE_PLACEHOLDER,
    MAX_SENTENCE_DISTANCE_EXCLUSIVE, MAX_TOKEN_DISTANCE_EXCLUSIVE, MIN_TOKEN_DISTANCE_EXCLUSIVE,
    NUMBER_PLACEHOLDER,
};
pub use document::{ingest_annotations, AnnotatedDocument, EntityMention, IngestResult, Unit, UnitKind};
pub use embeddings::{corpus_vocabulary, WordEmbeddings, SPECIAL_TOKENS, UNKNOWN_TOKEN};
pub use tokenize::{is_numeric, is_special, segment, segment_at, tokenize, word_tokens, Sentence, Token};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document {doc_id:?} (line {line}): {reason}")]
    Block {
        doc_id: String,
        line: usize,
        reason: String,
    },
    #[error("record on line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("word vectors: {0}")]
    Embeddings(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
