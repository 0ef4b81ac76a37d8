//! Training, checkpointing, evaluation and explanation.

mod checkpoint;
mod config;
mod inference;
mod model;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{KgMode, KgeObjective, ProviderMode, RunConfig, CONFIG_KEYS};
pub use inference::{
    evaluate_checkpoint, explain, explain_kg, predict, predict_pair_explained, AtomWeight, EvaluationReport, Explanation,
    Prediction, PredictionRow,
};
pub use model::{BatchKg, BatchLoss, Model, Padding, PairForward, PairInput};
pub use train::{pair_input, predict_indices, rmse, train, train_with, EpochLog, TrainOutcome};

use crate::datasets::DatasetError;
use crate::encoders::EncoderError;
use crate::fusion::FusionError;
use crate::kernel::KernelError;
use crate::kg::KgError;
use crate::metrics::MetricsError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("lookup failed: {0}")]
    Lookup(String),
    #[error("incompatible checkpoint and data: {0}")]
    Incompatible(String),
    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),
    #[error("empty batch: {0}")]
    EmptyBatch(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: pla={pla} kge={kge} loss={loss}")]
    Diverged { epoch: usize, batch: usize, pla: f64, kge: f64, loss: f64 },
    #[error("metrics for {partition}: {source}")]
    Metrics { partition: String, source: MetricsError },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
