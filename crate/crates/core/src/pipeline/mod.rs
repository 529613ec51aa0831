//! Training, cross-validation, prediction, document-level aggregation, the
//! sentence co-occurrence rule and the final merge.

mod cv;
mod predict;
mod train;

pub use cv::{assign_folds, cross_validate, run_fold, ConfigResult, CvDocument, CvReport, FoldMetrics};
pub use predict::{
    aggregate_document, gold_pair_sets, merge, predict, read_pair_file, read_predictions,
    rule_pairs, rule_prediction_set, write_loss_curve, write_predictions, InstancePrediction,
    PairPrediction, PredictionSet, Provenance, DEFAULT_RULE_THRESHOLD,
};
pub use train::{train, EarlyStopping, TrainConfig, TrainOutcome};

use thiserror::Error;

use crate::model::ModelError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("no training instances")]
    EmptyTrainingSet,
    #[error("{documents} documents cannot fill {folds} folds")]
    TooFewDocuments { documents: usize, folds: usize },
    #[error("non-finite loss in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
