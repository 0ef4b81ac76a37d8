//! Residue alphabet and sequence composition features.

use super::EncoderError;

/// The 20 standard amino acids followed by X, B and U.
pub const ALPHABET: [u8; 23] = *b"ACDEFGHIKLMNPQRSTVWYXBU";
pub const ALPHABET_SIZE: usize = ALPHABET.len();
const UNKNOWN: usize = 20;

/// Alphabet index of a residue letter, case-insensitive. Letters outside the
/// alphabet map to X; anything else is an input error.
pub fn residue_index(c: u8) -> Result<usize, EncoderError> {
    if !c.is_ascii_alphabetic() {
        return Err(EncoderError::Input(format!("invalid residue symbol {:?}", c as char)));
    }
    let up = c.to_ascii_uppercase();
    Ok(ALPHABET.iter().position(|&a| a == up).unwrap_or(UNKNOWN))
}

pub fn encode_sequence(seq: &str) -> Result<Vec<usize>, EncoderError> {
    seq.trim().bytes().map(residue_index).collect()
}

/// 1-mer (23) and overlapping 2-mer (529) frequencies, each block summing to
/// one. A single-residue sequence has an all-zero 2-mer block.
pub fn psc_features(seq: &str) -> Result<Vec<f64>, EncoderError> {
    let idx = encode_sequence(seq)?;
    if idx.is_empty() {
        return Err(EncoderError::Input("empty sequence".into()));
    }
    let mut out = vec![0.0; ALPHABET_SIZE + ALPHABET_SIZE * ALPHABET_SIZE];
    let n1 = idx.len() as f64;
    for &i in &idx {
        out[i] += 1.0 / n1;
    }
    let pairs = idx.len() - 1;
    for w in idx.windows(2) {
        out[ALPHABET_SIZE + w[0] * ALPHABET_SIZE + w[1]] += 1.0 / pairs as f64;
    }
    Ok(out)
}

/// `1 - cos(a, b)`; zero vectors are at distance 0 from each other and 1 from
/// anything else.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => (1.0 - dot / (na * nb)).max(0.0),
    }
}
