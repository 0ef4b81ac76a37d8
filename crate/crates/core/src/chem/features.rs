//! 74-slot integer atom descriptors.
//!
//! | slots  | block                                   |
//! |--------|-----------------------------------------|
//! | 0..43  | element one-hot over [`ATOM_TYPES`]     |
//! | 43..54 | degree one-hot, 0..=10                  |
//! | 54..61 | implicit valence one-hot, 0..=6         |
//! | 61     | formal charge                           |
//! | 62     | radical electrons                       |
//! | 63..68 | hybridization one-hot: sp, sp2, sp3, sp3d, sp3d2 |
//! | 68     | aromatic flag                           |
//! | 69..74 | total hydrogen one-hot, 0..=4           |
//!
//! Values outside a one-hot range leave that block empty.

use crate::kernel::Tensor;

use super::{BondOrder, Element, MolecularGraph};

pub const ATOM_FEATURE_DIM: usize = 74;

pub const ATOM_TYPES: [&str; 43] = [
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al", "I", "B", "V", "K", "Tl",
    "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H", "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr",
    "Cr", "Pt", "Hg", "Pb",
];

pub const ELEMENT_BLOCK: std::ops::Range<usize> = 0..43;
pub const DEGREE_BLOCK: std::ops::Range<usize> = 43..54;
pub const IMPLICIT_VALENCE_BLOCK: std::ops::Range<usize> = 54..61;
pub const CHARGE_SLOT: usize = 61;
pub const RADICAL_SLOT: usize = 62;
pub const HYBRIDIZATION_BLOCK: std::ops::Range<usize> = 63..68;
pub const AROMATIC_SLOT: usize = 68;
pub const TOTAL_H_BLOCK: std::ops::Range<usize> = 69..74;

/// One-hot blocks, for layout checks.
pub const ONE_HOT_BLOCKS: [std::ops::Range<usize>; 5] =
    [ELEMENT_BLOCK, DEGREE_BLOCK, IMPLICIT_VALENCE_BLOCK, HYBRIDIZATION_BLOCK, TOTAL_H_BLOCK];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hybridization {
    Sp,
    Sp2,
    Sp3,
    Sp3d,
    Sp3d2,
}

impl Hybridization {
    fn slot(self) -> usize {
        match self {
            Hybridization::Sp => 0,
            Hybridization::Sp2 => 1,
            Hybridization::Sp3 => 2,
            Hybridization::Sp3d => 3,
            Hybridization::Sp3d2 => 4,
        }
    }
}

pub type AtomFeatureVector = [i32; ATOM_FEATURE_DIM];

/// Heuristic hybridization: a triple bond or two double bonds give sp, one
/// double or aromaticity gives sp2, else sp3. S and P with five or six
/// substituents (neighbors plus hydrogens) are sp3d / sp3d2.
pub fn hybridization(graph: &MolecularGraph, i: usize) -> Hybridization {
    let atom = graph.atom(i);
    let (mut doubles, mut triples) = (0, 0);
    for &(_, k) in graph.neighbors(i) {
        match graph.bonds()[k].order {
            BondOrder::Double => doubles += 1,
            BondOrder::Triple => triples += 1,
            _ => {}
        }
    }
    let steric = graph.degree(i) + atom.implicit_hs as usize;
    if matches!(atom.element, Element::S | Element::P) && steric >= 5 {
        return if steric == 5 { Hybridization::Sp3d } else { Hybridization::Sp3d2 };
    }
    if triples > 0 || doubles >= 2 {
        Hybridization::Sp
    } else if doubles == 1 || atom.aromatic {
        Hybridization::Sp2
    } else {
        Hybridization::Sp3
    }
}

/// Implicit valence as used by the descriptor: hydrogens inferred from the
/// valence table. Bracket atoms state their hydrogens explicitly, so theirs is 0.
pub fn implicit_valence(graph: &MolecularGraph, i: usize) -> usize {
    let a = graph.atom(i);
    if a.bracket {
        0
    } else {
        a.implicit_hs as usize
    }
}

pub fn atom_features(graph: &MolecularGraph, i: usize) -> AtomFeatureVector {
    let mut f = [0i32; ATOM_FEATURE_DIM];
    let atom = graph.atom(i);
    if let Some(k) = ATOM_TYPES.iter().position(|s| *s == atom.element.symbol()) {
        f[ELEMENT_BLOCK.start + k] = 1;
    }
    let mut one_hot = |block: std::ops::Range<usize>, value: usize| {
        if value < block.len() {
            f[block.start + value] = 1;
        }
    };
    one_hot(DEGREE_BLOCK, graph.degree(i));
    one_hot(IMPLICIT_VALENCE_BLOCK, implicit_valence(graph, i));
    one_hot(HYBRIDIZATION_BLOCK, hybridization(graph, i).slot());
    one_hot(TOTAL_H_BLOCK, graph.total_hs(i));
    f[CHARGE_SLOT] = atom.charge as i32;
    f[RADICAL_SLOT] = atom.radical_electrons as i32;
    f[AROMATIC_SLOT] = i32::from(atom.aromatic);
    f
}

/// Column `i` of the result describes atom `i`.
pub fn featurize_atoms(graph: &MolecularGraph) -> Vec<AtomFeatureVector> {
    (0..graph.atom_count()).map(|i| atom_features(graph, i)).collect()
}

/// `74 x n_cols` tensor; columns past the atom count are zero padding.
pub fn feature_tensor(features: &[AtomFeatureVector], n_cols: usize) -> Tensor {
    let n_cols = n_cols.max(features.len());
    let mut t = Tensor::zeros(ATOM_FEATURE_DIM, n_cols);
    for (c, col) in features.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            if v != 0 {
                t.set(r, c, v as f64);
            }
        }
    }
    t
}
