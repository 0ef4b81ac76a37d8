//! Cross-attention fusion, the affinity decoder and the training objectives.

use rand::Rng;

use crate::encoders::LocalRepresentation;
use crate::kernel::{Axis, KernelError, ParamId, ParamStore, Tape, Var};
use crate::nn::Linear;

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("width mismatch: {0}")]
    Width(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `V = H_pᵀ H_d` with the masks of both sides.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMap {
    pub value: Var,
    pub protein_mask: Vec<bool>,
    pub ligand_mask: Vec<bool>,
}

/// Column vectors `α_p` (`M x 1`) and `α_d` (`N x 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttentionWeights {
    pub protein: Var,
    pub ligand: Var,
}

pub fn interaction_map(
    tape: &mut Tape,
    hp: &LocalRepresentation,
    hd: &LocalRepresentation,
) -> Result<InteractionMap, FusionError> {
    let (dp, dd) = (tape.value(hp.value).rows(), tape.value(hd.value).rows());
    if dp != dd {
        return Err(FusionError::Width(format!("protein width {dp}, ligand width {dd}")));
    }
    let hpt = tape.transpose(hp.value);
    let value = tape.matmul(hpt, hd.value)?;
    Ok(InteractionMap { value, protein_mask: hp.mask.clone(), ligand_mask: hd.mask.clone() })
}

fn valid(mask: &[bool], op: &'static str) -> Result<usize, FusionError> {
    match mask.iter().filter(|&&m| m).count() {
        0 => Err(KernelError::Degenerate { op }.into()),
        n => Ok(n),
    }
}

/// `softmax((1/√D) · tanh(rows / n))` over the masked entries of a column.
fn attend(tape: &mut Tape, sums: Var, n: usize, d: usize, mask: &[bool]) -> Result<Var, FusionError> {
    let avg = tape.scale(sums, 1.0 / n as f64);
    let act = tape.tanh(avg);
    let scores = tape.scale(act, 1.0 / (d as f64).sqrt());
    Ok(tape.softmax_masked(scores, mask)?)
}

/// `α_p` from each fragment's interactions averaged over valid atoms, `α_d`
/// from each atom's interactions averaged over valid fragments.
pub fn cross_attention(tape: &mut Tape, v: &InteractionMap, d: usize) -> Result<AttentionWeights, FusionError> {
    let m_valid = valid(&v.protein_mask, "cross_attention")?;
    let n_valid = valid(&v.ligand_mask, "cross_attention")?;
    let rows = tape.sum_columns(v.value);
    let protein = attend(tape, rows, n_valid, d, &v.protein_mask)?;
    let vt = tape.transpose(v.value);
    let cols = tape.sum_columns(vt);
    let ligand = attend(tape, cols, m_valid, d, &v.ligand_mask)?;
    Ok(AttentionWeights { protein, ligand })
}

/// `f = H_p α_p ⊕ H_d α_d`, protein half first.
pub fn joint_representation(
    tape: &mut Tape,
    hp: Var,
    hd: Var,
    alpha: &AttentionWeights,
) -> Result<Var, FusionError> {
    let fp = tape.matmul(hp, alpha.protein)?;
    let fd = tape.matmul(hd, alpha.ligand)?;
    Ok(tape.concat(fp, fd, Axis::Rows)?)
}

/// Interaction module variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FusionMode {
    /// Bidirectional attention over the interaction map.
    #[default]
    Cross,
    /// The ligand's mean vector attends over protein fragments.
    ProteinAttn,
    /// The protein's mean vector attends over ligand atoms.
    LigandAttn,
    /// Max-pooled columns of both sides, concatenated.
    Concat,
}

impl FusionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::Cross => "cross",
            FusionMode::ProteinAttn => "protein-attn",
            FusionMode::LigandAttn => "ligand-attn",
            FusionMode::Concat => "concat",
        }
    }
}

impl std::str::FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cross" => Ok(FusionMode::Cross),
            "protein-attn" => Ok(FusionMode::ProteinAttn),
            "ligand-attn" => Ok(FusionMode::LigandAttn),
            "concat" => Ok(FusionMode::Concat),
            other => Err(format!("unknown fusion mode {other}")),
        }
    }
}

/// Output of a fusion variant. Attention and `V` are present when the
/// variant computes them.
#[derive(Clone, Debug, PartialEq)]
pub struct Fused {
    pub joint: Var,
    pub protein_attention: Option<Var>,
    pub ligand_attention: Option<Var>,
    pub interaction: Option<InteractionMap>,
}

/// `softmax((1/√D) · tanh(Hᵀ g))` over the valid columns of `H`.
fn vector_attention(tape: &mut Tape, h: &LocalRepresentation, g: Var, d: usize) -> Result<Var, FusionError> {
    valid(&h.mask, "vector_attention")?;
    let ht = tape.transpose(h.value);
    let scores = tape.matmul(ht, g)?;
    let act = tape.tanh(scores);
    let scores = tape.scale(act, 1.0 / (d as f64).sqrt());
    Ok(tape.softmax_masked(scores, &h.mask)?)
}

pub fn fuse(
    tape: &mut Tape,
    mode: FusionMode,
    hp: &LocalRepresentation,
    hd: &LocalRepresentation,
) -> Result<Fused, FusionError> {
    let d = tape.value(hp.value).rows();
    if tape.value(hd.value).rows() != d {
        return Err(FusionError::Width(format!("protein width {d}, ligand width {}", tape.value(hd.value).rows())));
    }
    match mode {
        FusionMode::Cross => {
            let v = interaction_map(tape, hp, hd)?;
            let alpha = cross_attention(tape, &v, d)?;
            let joint = joint_representation(tape, hp.value, hd.value, &alpha)?;
            Ok(Fused {
                joint,
                protein_attention: Some(alpha.protein),
                ligand_attention: Some(alpha.ligand),
                interaction: Some(v),
            })
        }
        FusionMode::ProteinAttn => {
            let gd = tape.mean_masked(hd.value, &hd.mask)?;
            let a = vector_attention(tape, hp, gd, d)?;
            let fp = tape.matmul(hp.value, a)?;
            let joint = tape.concat(fp, gd, Axis::Rows)?;
            Ok(Fused { joint, protein_attention: Some(a), ligand_attention: None, interaction: None })
        }
        FusionMode::LigandAttn => {
            let gp = tape.mean_masked(hp.value, &hp.mask)?;
            let a = vector_attention(tape, hd, gp, d)?;
            let fd = tape.matmul(hd.value, a)?;
            let joint = tape.concat(gp, fd, Axis::Rows)?;
            Ok(Fused { joint, protein_attention: None, ligand_attention: Some(a), interaction: None })
        }
        FusionMode::Concat => {
            let mp = tape.max_masked(hp.value, &hp.mask)?;
            let md = tape.max_masked(hd.value, &hd.mask)?;
            let joint = tape.concat(mp, md, Axis::Rows)?;
            Ok(Fused { joint, protein_attention: None, ligand_attention: None, interaction: None })
        }
    }
}

/// MLP `2D -> hidden -> 1` with ReLU on the hidden layer only.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoder {
    pub hidden: Linear,
    pub output: Linear,
}

impl Decoder {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            hidden: Linear::new(store, "decoder.hidden", input, hidden, true, rng),
            output: Linear::new(store, "decoder.output", hidden, 1, true, rng),
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        [self.hidden, self.output].iter().flat_map(|l| std::iter::once(l.weight).chain(l.bias)).collect()
    }
}

/// `ŷ = MLP(f)` as a `1 x k` row for `k` stacked joint vectors (`2D x k`).
pub fn predict_affinity(tape: &mut Tape, store: &ParamStore, decoder: &Decoder, f: Var) -> Result<Var, FusionError> {
    let expected = decoder.hidden.in_dim(store);
    let got = tape.value(f).rows();
    if got != expected {
        return Err(FusionError::Width(format!("decoder expects {expected} inputs, got {got}")));
    }
    let h = decoder.hidden.forward(tape, store, f)?;
    let h = tape.relu(h);
    Ok(decoder.output.forward(tape, store, h)?)
}

/// Mean absolute error.
pub fn pla_loss(tape: &mut Tape, predictions: Var, labels: Var) -> Result<Var, FusionError> {
    Ok(tape.mae(predictions, labels)?)
}

/// `Σ ‖p‖²` over the given parameters, built from Hadamard squares.
pub fn squared_norm(tape: &mut Tape, store: &ParamStore, params: &[ParamId]) -> Result<Option<Var>, FusionError> {
    let mut total: Option<Var> = None;
    for &id in params {
        let p = tape.param(store, id);
        let sq = tape.hadamard(p, p)?;
        let s = tape.sum_all(sq);
        total = Some(match total {
            Some(acc) => tape.add(acc, s)?,
            None => s,
        });
    }
    Ok(total)
}

/// `L = L_PLA + β L_KGE + λ Σ‖p‖²`. A missing KGE term is left out entirely.
pub fn total_loss(
    tape: &mut Tape,
    store: &ParamStore,
    pla: Var,
    kge: Option<Var>,
    beta: f64,
    lambda: f64,
    params: &[ParamId],
) -> Result<Var, FusionError> {
    if !(beta >= 0.0 && lambda >= 0.0) {
        return Err(FusionError::Contract(format!("β and λ must be nonnegative, got {beta} and {lambda}")));
    }
    let mut loss = pla;
    if let Some(k) = kge {
        let k = tape.scale(k, beta);
        loss = tape.add(loss, k)?;
    }
    if let Some(reg) = squared_norm(tape, store, params)? {
        let reg = tape.scale(reg, lambda);
        loss = tape.add(loss, reg)?;
    }
    Ok(loss)
}

