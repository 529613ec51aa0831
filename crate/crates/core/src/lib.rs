//! Knowledge-augmented memory networks for document-level extraction of
//! protein–protein interactions affected by mutations.
//!
//! The crate is organised along the processing chain:
//!
//! - [`numerics`]: matrices, softmax, Adam, initialisation, gradient checks
//! - [`kb`]: knowledge-base triples and translation embeddings
//! - [`corpus`]: annotated documents, candidate pairs, masked contexts
//! - [`model`]: the dual memory network and its variants
//! - [`pipeline`]: training, cross-validation, aggregation, rules, merging
//! - [`eval`]: micro-averaged precision/recall/F1
//! - [`cli`]: the `mnm` command-line tool

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod kb;
pub mod model;
pub mod numerics;
pub mod pair;
pub mod pipeline;
pub mod synth;

pub use pair::GenePair;
