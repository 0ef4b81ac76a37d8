//! Protein fragment encoder: pooled residue embeddings through a ReLU DNN.

use rand::Rng;

use crate::kernel::{ParamStore, Tape};
use crate::nn::{apply_column_mask, Linear};

use super::{EncoderError, LocalRepresentation, ProteinEmbeddingProvider};

/// Dense layers `widths[0] -> widths[1] -> ... -> D`, each followed by ReLU.
#[derive(Clone, Debug, PartialEq)]
pub struct ProteinEncoder {
    pub layers: Vec<Linear>,
}

/// Length limits for one protein input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProteinInput {
    /// Maximum residues; longer sequences are truncated.
    pub k_max: usize,
    /// Pool window.
    pub window: usize,
    /// Zero-pad the residue axis up to this length.
    pub pad_to: Option<usize>,
}

impl ProteinEncoder {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, widths: &[usize], rng: &mut R) -> Result<Self, EncoderError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(EncoderError::Contract(format!("invalid protein widths {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("protein.dnn.{i}"), w[0], w[1], true, rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn output_dim(&self, store: &ParamStore) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim(store))
    }

    /// Applies the DNN to pooled fragments, keeping padded columns at zero.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        pooled: LocalRepresentation,
    ) -> Result<LocalRepresentation, EncoderError> {
        let mut x = pooled.value;
        for layer in &self.layers {
            let y = layer.forward(tape, store, x)?;
            let y = tape.relu(y);
            x = apply_column_mask(tape, y, &pooled.mask)?;
        }
        Ok(LocalRepresentation { value: x, mask: pooled.mask })
    }
}

/// `H_p = DNN(pool(provider(seq)))`.
pub fn encode_protein(
    tape: &mut Tape,
    store: &ParamStore,
    provider: &ProteinEmbeddingProvider,
    encoder: &ProteinEncoder,
    protein_id: &str,
    seq: &str,
    input: ProteinInput,
) -> Result<LocalRepresentation, EncoderError> {
    let dp = provider.dim(store);
    let first = encoder.layers.first().map_or(0, |l| l.in_dim(store));
    if dp != first {
        return Err(EncoderError::Contract(format!("provider width {dp} does not match encoder input {first}")));
    }
    let pooled = provider.pooled(tape, store, protein_id, seq, input.k_max, input.window, input.pad_to)?;
    encoder.forward(tape, store, pooled)
}
