//! Non-overlapping s-mer average pooling as a constant matrix product.

use crate::kernel::{KernelError, Tape, Tensor, Var};

use super::EncoderError;

pub fn fragment_count(k: usize, s: usize) -> usize {
    k.div_ceil(s)
}

/// `k x ceil(k/s)` matrix whose column `j` averages rows `js..(j+1)s-1`.
/// A trailing partial window still divides by `s`, as if zero-padded.
pub fn pooling_matrix(k: usize, s: usize) -> Result<Tensor, EncoderError> {
    if s == 0 {
        return Err(EncoderError::Contract("pool window must be at least 1".into()));
    }
    let m = fragment_count(k, s);
    let mut p = Tensor::zeros(k, m);
    for r in 0..k {
        p.set(r, r / s, 1.0 / s as f64);
    }
    Ok(p)
}

/// Fragment `j` is valid when its window overlaps residues `0..valid_len`.
pub fn fragment_mask(k: usize, s: usize, valid_len: usize) -> Vec<bool> {
    (0..fragment_count(k, s)).map(|j| j * s < valid_len).collect()
}

/// Pools the columns of a `D_p x K` matrix into `D_p x ceil(K/s)`.
pub fn pool_smers(m: &Tensor, s: usize, valid_len: usize) -> Result<(Tensor, Vec<bool>), EncoderError> {
    let p = pooling_matrix(m.cols(), s)?;
    Ok((m.matmul(&p)?, fragment_mask(m.cols(), s, valid_len.min(m.cols()))))
}

/// Tape version of [`pool_smers`].
pub fn pool_smers_var(tape: &mut Tape, m: Var, s: usize, valid_len: usize) -> Result<(Var, Vec<bool>), EncoderError> {
    let k = tape.value(m).cols();
    let p = tape.constant(pooling_matrix(k, s)?);
    let out = tape.matmul(m, p).map_err(|e: KernelError| EncoderError::from(e))?;
    Ok((out, fragment_mask(k, s, valid_len.min(k))))
}
