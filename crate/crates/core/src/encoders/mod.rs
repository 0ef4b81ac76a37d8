//! Protein and ligand encoders, global projection and protein composition.

mod embfile;
mod ligand;
mod pooling;
mod protein;
mod provider;
pub mod residues;

pub use embfile::{index_path, load_index, read_record, EmbeddingStore, IndexEntry, EMB_MAGIC, EMB_VERSION};
pub use ligand::{encode_ligand, normalized_adjacency, LigandEncoder};
pub use pooling::{fragment_count, fragment_mask, pool_smers, pool_smers_var, pooling_matrix};
pub use protein::{encode_protein, ProteinEncoder, ProteinInput};
pub use provider::ProteinEmbeddingProvider;
pub use residues::{cosine_distance, psc_features};

use rand::Rng;

use crate::kernel::{KernelError, ParamStore, Tape, Var};
use crate::nn::Linear;

#[derive(Debug, thiserror::Error)]
pub enum EncoderError {
    #[error("input error: {0}")]
    Input(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("embedding file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Column-wise local features (`D x M` or `D x N`) with the valid-column mask.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalRepresentation {
    pub value: Var,
    pub mask: Vec<bool>,
}

impl LocalRepresentation {
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// `W_k`, `b_k` of a global projection.
pub fn global_projection<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, dim: usize, rng: &mut R) -> Linear {
    Linear::new(store, name, dim, dim, true, rng)
}

/// `h = W_k · mean(valid columns of H) + b_k`.
pub fn global_project(
    tape: &mut Tape,
    store: &ParamStore,
    projection: &Linear,
    rep: &LocalRepresentation,
) -> Result<Var, EncoderError> {
    let mean = tape.mean_masked(rep.value, &rep.mask)?;
    Ok(projection.forward(tape, store, mean)?)
}
