//! Small composite layers built from kernel primitives.

use rand::Rng;

use crate::kernel::{KernelError, ParamId, ParamStore, Tape, Tensor, Var};

/// Affine map `W x + b 1ᵀ` applied column-wise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

impl Linear {
    /// Weights and bias uniform in `±1/√fan_in`.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let weight = store.add(format!("{name}.weight"), Tensor::uniform(fan_out, fan_in, bound, rng));
        let bias = bias.then(|| store.add(format!("{name}.bias"), Tensor::uniform(fan_out, 1, bound, rng)));
        Self { weight, bias }
    }

    pub fn in_dim(&self, store: &ParamStore) -> usize {
        store.get(self.weight).cols()
    }

    pub fn out_dim(&self, store: &ParamStore) -> usize {
        store.get(self.weight).rows()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var, KernelError> {
        let w = tape.param(store, self.weight);
        let y = tape.matmul(w, x)?;
        match self.bias {
            Some(b) => {
                let cols = tape.value(x).cols();
                let b = tape.param(store, b);
                let bb = broadcast_columns(tape, b, cols)?;
                tape.add(y, bb)
            }
            None => Ok(y),
        }
    }
}

/// `b · 1ᵀ`: repeats a column vector `cols` times.
pub fn broadcast_columns(tape: &mut Tape, b: Var, cols: usize) -> Result<Var, KernelError> {
    if cols == 1 {
        return Ok(b);
    }
    let ones = tape.constant(Tensor::filled(1, cols, 1.0));
    tape.matmul(b, ones)
}

/// `rows x mask.len()` tensor of ones in valid columns, zeros elsewhere.
pub fn column_mask(rows: usize, mask: &[bool]) -> Tensor {
    let mut t = Tensor::zeros(rows, mask.len());
    for r in 0..rows {
        for (c, &m) in mask.iter().enumerate() {
            if m {
                t.set(r, c, 1.0);
            }
        }
    }
    t
}

/// Zeroes the masked columns of `x`. A no-op when every column is valid.
pub fn apply_column_mask(tape: &mut Tape, x: Var, mask: &[bool]) -> Result<Var, KernelError> {
    if mask.iter().all(|&m| m) {
        return Ok(x);
    }
    let m = tape.constant(column_mask(tape.value(x).rows(), mask));
    tape.hadamard(x, m)
}
