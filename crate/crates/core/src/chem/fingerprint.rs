//! Circular (Morgan-style) fingerprints.
//!
//! Atom identifiers start from (atomic number, degree, formal charge,
//! total H, aromaticity) and are refined for `radius` rounds by hashing each
//! atom's identifier with the sorted (bond order, neighbor identifier) list.
//! Every identifier from every round is folded into the bit vector modulo
//! its length. The mixing function is the SplitMix64 finalizer, so bit
//! positions are stable across platforms but unrelated to other toolkits.

use super::{ChemError, MolecularGraph};

pub const DEFAULT_FP_BITS: usize = 2048;
pub const DEFAULT_FP_RADIUS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
    radius: usize,
}

impl Fingerprint {
    pub fn empty(nbits: usize, radius: usize) -> Self {
        Self { words: vec![0; nbits.div_ceil(64)], nbits, radius }
    }

    pub fn set(&mut self, bit: usize) {
        let bit = bit % self.nbits;
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.nbits && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn on_bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(|&b| self.get(b))
    }

    /// `1 - |a ∩ b| / |a ∪ b|`; two empty fingerprints are at distance 0.
    pub fn jaccard_distance(&self, other: &Fingerprint) -> f64 {
        let (mut inter, mut union) = (0u32, 0u32);
        for (a, b) in self.words.iter().zip(&other.words) {
            inter += (a & b).count_ones();
            union += (a | b).count_ones();
        }
        if union == 0 {
            0.0
        } else {
            1.0 - inter as f64 / union as f64
        }
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn combine(seed: u64, value: u64) -> u64 {
    mix64(seed ^ value.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(seed << 6).wrapping_add(seed >> 2))
}

fn hash_seq(values: impl IntoIterator<Item = u64>) -> u64 {
    values.into_iter().fold(0xCBF2_9CE4_8422_2325, combine)
}

/// Initial per-atom identifiers.
pub fn atom_invariants(graph: &MolecularGraph) -> Vec<u64> {
    (0..graph.atom_count())
        .map(|i| {
            let a = graph.atom(i);
            hash_seq([
                a.element.atomic_number() as u64,
                graph.degree(i) as u64,
                (a.charge as i64 + 128) as u64,
                graph.total_hs(i) as u64,
                u64::from(a.aromatic),
            ])
        })
        .collect()
}

pub fn morgan_fingerprint(graph: &MolecularGraph, radius: usize, nbits: usize) -> Result<Fingerprint, ChemError> {
    if nbits < 64 {
        return Err(ChemError::Contract(format!("fingerprint needs at least 64 bits, got {nbits}")));
    }
    let mut fp = Fingerprint::empty(nbits, radius);
    let mut ids = atom_invariants(graph);
    for &id in &ids {
        fp.set((id % nbits as u64) as usize);
    }
    for round in 1..=radius {
        let next: Vec<u64> = (0..graph.atom_count())
            .map(|i| {
                let mut env: Vec<(u64, u64)> = graph
                    .neighbors(i)
                    .iter()
                    .map(|&(j, k)| (graph.bonds()[k].order.code(), ids[j]))
                    .collect();
                env.sort_unstable();
                let head = [round as u64, ids[i]];
                hash_seq(head.into_iter().chain(env.into_iter().flat_map(|(b, n)| [b, n])))
            })
            .collect();
        for &id in &next {
            fp.set((id % nbits as u64) as usize);
        }
        ids = next;
    }
    Ok(fp)
}
