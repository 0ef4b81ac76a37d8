//! Ligand atom encoder: linear projection of atom features and a GCN stack.

use rand::Rng;

use crate::chem::{featurize_atoms, feature_tensor, MolecularGraph, ATOM_FEATURE_DIM};
use crate::kernel::{ParamStore, Tape, Tensor};
use crate::nn::{apply_column_mask, Linear};

use super::{EncoderError, LocalRepresentation};

#[derive(Clone, Debug, PartialEq)]
pub struct LigandEncoder {
    /// `74 -> D`, no bias.
    pub projection: Linear,
    pub layers: Vec<Linear>,
}

impl LigandEncoder {
    /// Projection to `widths[0]`, then one GCN layer per further width.
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, widths: &[usize], rng: &mut R) -> Result<Self, EncoderError> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(EncoderError::Contract(format!("invalid ligand widths {widths:?}")));
        }
        let projection = Linear::new(store, "ligand.projection", ATOM_FEATURE_DIM, widths[0], false, rng);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("ligand.gcn.{i}"), w[0], w[1], true, rng))
            .collect();
        Ok(Self { projection, layers })
    }

    pub fn output_dim(&self, store: &ParamStore) -> usize {
        self.layers.last().unwrap_or(&self.projection).out_dim(store)
    }
}

/// `D^-1/2 (A + I) D^-1/2` over the atoms, zero-padded to `n_cols`.
pub fn normalized_adjacency(graph: &MolecularGraph, n_cols: usize) -> Tensor {
    let n = graph.atom_count();
    let n_cols = n_cols.max(n);
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((graph.degree(i) + 1) as f64).sqrt()).collect();
    let mut a = Tensor::zeros(n_cols, n_cols);
    for i in 0..n {
        a.set(i, i, inv_sqrt[i] * inv_sqrt[i]);
        for &(j, _) in graph.neighbors(i) {
            a.set(i, j, inv_sqrt[i] * inv_sqrt[j]);
        }
    }
    a
}

/// `H_d`: `X = W M_d`, then `H <- ReLU(W_g H Â + b_g 1ᵀ)` per layer with
/// padded columns reset to zero.
pub fn encode_ligand(
    tape: &mut Tape,
    store: &ParamStore,
    encoder: &LigandEncoder,
    graph: &MolecularGraph,
    n_max: usize,
    pad_to: Option<usize>,
) -> Result<LocalRepresentation, EncoderError> {
    let n = graph.atom_count();
    if n == 0 {
        return Err(EncoderError::Input("molecule has no atoms".into()));
    }
    if n > n_max {
        return Err(EncoderError::Input(format!("molecule has {n} atoms, limit is {n_max}")));
    }
    let cols = pad_to.map_or(n, |p| p.max(n));
    let mask: Vec<bool> = (0..cols).map(|c| c < n).collect();
    let features = tape.constant(feature_tensor(&featurize_atoms(graph), cols));
    let adjacency = tape.constant(normalized_adjacency(graph, cols));
    let mut h = encoder.projection.forward(tape, store, features)?;
    for layer in &encoder.layers {
        let w = tape.param(store, layer.weight);
        let wh = tape.matmul(w, h)?;
        let mut z = tape.matmul(wh, adjacency)?;
        if let Some(b) = layer.bias {
            let b = tape.param(store, b);
            let bb = crate::nn::broadcast_columns(tape, b, cols)?;
            z = tape.add(z, bb)?;
        }
        let z = tape.relu(z);
        h = apply_column_mask(tape, z, &mask)?;
    }
    Ok(LocalRepresentation { value: h, mask })
}
