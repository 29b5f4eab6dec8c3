//! Gradient-boosted trees over sparse term counts.
//!
//! The learner fits an additive stack of small regression trees by greedy
//! search on gradient statistics. Splits test term presence only, so absent
//! terms (including every out-of-vocabulary term at prediction time) have a
//! well-defined default path. Three losses are supported: squared error,
//! absolute error, and the logistic loss for binary classification — the
//! latter with per-class weighting and a probability threshold.
//!
//! Training is deterministic: same inputs and seed give byte-identical
//! models, whether the split scan runs serially or across threads.

mod cv;
mod loss;
mod model;
mod train;
mod tree;

pub use cv::{cross_validate, cross_validate_with, CvResult};
pub use loss::{sigmoid, weighted_mean_loss, Loss, PROB_CLAMP};
pub use model::{BoostedModel, PerTreeView, TrainingCurve, MODEL_FORMAT_VERSION};
pub use train::{train, train_with, TrainParams};
pub use tree::{grow_tree, ColumnIndex, LeafFit, Node, Tree, MIN_SPLIT_GAIN};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbtError {
    #[error("training set has no rows")]
    EmptyTrainingSet,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid parameter: {what}")]
    InvalidParam { what: String },
    #[error("label at index {index} is {value}, but the logistic loss needs 0 or 1")]
    NonBinaryLabel { index: usize, value: f64 },
    #[error("label at index {index} is not finite ({value})")]
    NonFiniteLabel { index: usize, value: f64 },
    #[error("labels contain a single class; both classes are required")]
    SingleClass,
    #[error("row {row} references term {term} but the vocabulary has {n_terms} terms")]
    TermOutOfRange {
        row: usize,
        term: u32,
        n_terms: usize,
    },
    #[error("probabilities are defined for the logistic loss, not {loss}")]
    ProbabilityRequiresLogistic { loss: Loss },
    #[error("fold count {k} needs at least 2 folds and as many rows as folds")]
    InvalidFoldCount { k: usize },
    #[error(
        "cannot build {k} folds that all contain both classes \
         ({positives} positive, {negatives} negative rows); \
         use fewer folds or rebalance the training sample"
    )]
    FoldConstruction {
        k: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("model format version {found} is not supported (expected {supported})")]
    FormatVersion { found: u32, supported: u32 },
    #[error("vocabulary fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("model file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
