//! Per-residue embedding providers.

use rand::Rng;

use crate::kernel::{ParamId, ParamStore, Tape, Tensor};

use super::pooling::{fragment_mask, pooling_matrix};
use super::residues::{encode_sequence, ALPHABET_SIZE};
use super::{EmbeddingStore, EncoderError, LocalRepresentation};

/// Source of the `D_p x K` residue matrix of a protein.
#[derive(Clone, Debug, PartialEq)]
pub enum ProteinEmbeddingProvider {
    /// Precomputed matrices keyed by protein id.
    FileBacked(EmbeddingStore),
    /// Learnable `D_p x 23` table, one column per residue symbol.
    Trainable { table: ParamId },
}

impl ProteinEmbeddingProvider {
    /// Registers a trainable table with entries uniform in `±1/√23`.
    pub fn trainable<R: Rng + ?Sized>(store: &mut ParamStore, dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (ALPHABET_SIZE as f64).sqrt();
        let table = store.add("protein.residue_table", Tensor::uniform(dim, ALPHABET_SIZE, bound, rng));
        Self::Trainable { table }
    }

    pub fn dim(&self, store: &ParamStore) -> usize {
        match self {
            Self::FileBacked(e) => e.dim(),
            Self::Trainable { table } => store.get(*table).rows(),
        }
    }

    /// The residue matrix, truncated to `k_max` columns, with its valid length.
    pub fn residue_matrix(
        &self,
        store: &ParamStore,
        protein_id: &str,
        seq: &str,
        k_max: usize,
    ) -> Result<(Tensor, usize), EncoderError> {
        match self {
            Self::FileBacked(e) => {
                let m = e
                    .get(protein_id)
                    .ok_or_else(|| EncoderError::Lookup(format!("no embedding for protein {protein_id}")))?;
                let k = m.cols().min(k_max);
                let mut out = Tensor::zeros(m.rows(), k);
                for r in 0..m.rows() {
                    for c in 0..k {
                        out.set(r, c, m.get(r, c));
                    }
                }
                Ok((out, k))
            }
            Self::Trainable { table } => {
                let one_hot = one_hot_columns(seq, k_max, None)?;
                let k = one_hot.cols();
                Ok((store.get(*table).matmul(&one_hot)?, k))
            }
        }
    }

    /// Pooled `D_p x M` representation. `pad_to` appends zero residues up to
    /// that length; the fragment mask marks padding invalid.
    pub fn pooled(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        protein_id: &str,
        seq: &str,
        k_max: usize,
        s: usize,
        pad_to: Option<usize>,
    ) -> Result<LocalRepresentation, EncoderError> {
        match self {
            Self::FileBacked(_) => {
                let (m, valid) = self.residue_matrix(store, protein_id, seq, k_max)?;
                let m = pad_columns(m, pad_to);
                let k = m.cols();
                let p = pooling_matrix(k, s)?;
                let value = tape.constant(m.matmul(&p)?);
                Ok(LocalRepresentation { value, mask: fragment_mask(k, s, valid) })
            }
            Self::Trainable { table } => {
                // T (O P) equals (T O) P; the pooled one-hot is a per-fragment
                // residue composition.
                let one_hot = one_hot_columns(seq, k_max, pad_to)?;
                let valid = encode_sequence(seq)?.len().min(k_max);
                let k = one_hot.cols();
                let composition = tape.constant(one_hot.matmul(&pooling_matrix(k, s)?)?);
                let t = tape.param(store, *table);
                let value = tape.matmul(t, composition)?;
                Ok(LocalRepresentation { value, mask: fragment_mask(k, s, valid) })
            }
        }
    }
}

fn pad_columns(m: Tensor, pad_to: Option<usize>) -> Tensor {
    match pad_to {
        Some(n) if n > m.cols() => {
            let mut out = Tensor::zeros(m.rows(), n);
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    out.set(r, c, m.get(r, c));
                }
            }
            out
        }
        _ => m,
    }
}

/// `23 x L` one-hot residue matrix, truncated to `k_max`, optionally padded.
fn one_hot_columns(seq: &str, k_max: usize, pad_to: Option<usize>) -> Result<Tensor, EncoderError> {
    let idx = encode_sequence(seq)?;
    if idx.is_empty() {
        return Err(EncoderError::Input("empty sequence".into()));
    }
    let k = idx.len().min(k_max);
    let cols = pad_to.map_or(k, |p| p.max(k));
    let mut t = Tensor::zeros(ALPHABET_SIZE, cols);
    for (c, &i) in idx.iter().take(k).enumerate() {
        t.set(i, c, 1.0);
    }
    Ok(t)
}
