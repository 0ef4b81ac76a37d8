//! Knowledge graph storage, triple scoring and entity queries.

mod graph;
mod query;
mod score;

pub use graph::{Entity, EntityType, KgSummary, KnowledgeGraph, Triple};
pub use query::{format_ranking, nearest_entities, RankedEntity};
pub use score::{kge_loss, kge_margin_loss, score_rotate, score_transe, KgEmbeddings, KgeTerm, ScoreFn};

use crate::kernel::KernelError;

#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: type rule violated: {msg}")]
    TypeRule { line: usize, msg: String },
    #[error("line {line}: duplicate triple {triple}")]
    Duplicate { line: usize, triple: String },
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("width mismatch: {0}")]
    Width(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl KgError {
    fn at_line(self, line: usize) -> Self {
        match self {
            KgError::Malformed { msg, .. } => KgError::Malformed { line, msg },
            KgError::TypeRule { msg, .. } => KgError::TypeRule { line, msg },
            KgError::Duplicate { triple, .. } => KgError::Duplicate { line, triple },
            other => other,
        }
    }
}
