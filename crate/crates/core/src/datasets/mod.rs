//! Complex datasets and split protocols.

mod cluster;
mod load;
mod split;

pub use cluster::{single_linkage_clusters, ClusterAssignment};
pub use load::{ComplexSample, Dataset, DATASET_HEADER};
pub use split::{
    clustering_pair_split, cold_pair_split, ligand_clusters, ligand_fingerprints, protein_clusters, random_split,
    split_by_protocol, ClusterSplitParams, DatasetSplit, SplitLabel, COLD_FRACTION, COLD_VAL_SHARE, RANDOM_RATIOS,
};

use crate::chem::SmilesError;
use crate::encoders::EncoderError;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("sample {sample}: unparseable SMILES: {source}")]
    Smiles { sample: String, source: SmilesError },
    #[error("line {line}: duplicate id {id}")]
    Duplicate { line: usize, id: String },
    #[error("dataset is empty")]
    Empty,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    /// Maps row-based line numbers (row + 2) to the file's own line numbers.
    fn relined(self, line_of: &[usize]) -> Self {
        let fix = |line: usize| line.checked_sub(2).and_then(|r| line_of.get(r)).copied().unwrap_or(line);
        match self {
            DatasetError::Malformed { line, msg } => DatasetError::Malformed { line: fix(line), msg },
            DatasetError::Duplicate { line, id } => DatasetError::Duplicate { line: fix(line), id },
            other => other,
        }
    }
}
