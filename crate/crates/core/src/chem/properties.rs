//! Ligand descriptors and qualitative chemical-feature tags.
//!
//! Counting rules:
//! - donor: N or O carrying at least one hydrogen
//! - acceptor: N or O with a lone pair and no positive charge; an aromatic N
//!   with three substituents (hydrogens included) has its pair in the ring
//! - rotatable bond: non-ring single bond between two heavy atoms that each
//!   have another heavy neighbor
//! - stereocenter: atom carrying a tetrahedral mark in the input
//! - heteroatom: any element other than C and H
//! - rings come from the smallest set of smallest rings; a ring is aromatic
//!   when all its atoms are, and a carbocycle when all its atoms are carbon
//!
//! Tags: `hydrophobe` (a carbon with only C/H neighbors, or Cl/Br/I),
//! `positively_charged`, `negatively_charged`, `donor`, `acceptor`, `aromatic`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BondOrder, Element, MolecularGraph};

pub const DESCRIPTOR_NAMES: [&str; 11] = [
    "num_h_donors",
    "num_h_acceptors",
    "num_aromatic_carbocycles",
    "num_aromatic_heterocycles",
    "num_aliphatic_carbocycles",
    "num_aliphatic_heterocycles",
    "num_rotatable_bonds",
    "num_stereocenters",
    "num_heteroatoms",
    "num_positive_atoms",
    "num_negative_atoms",
];

pub const FEATURE_TAGS: [&str; 6] =
    ["hydrophobe", "positively_charged", "negatively_charged", "donor", "acceptor", "aromatic"];

/// Relation used for chemical-feature triples.
pub const FEATURE_RELATION: &str = "has_feature";

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LigandPropertySet {
    pub descriptors: BTreeMap<&'static str, u32>,
    pub features: Vec<&'static str>,
}

impl LigandPropertySet {
    pub fn get(&self, name: &str) -> u32 {
        self.descriptors.get(name).copied().unwrap_or(0)
    }

    pub fn has_feature(&self, tag: &str) -> bool {
        self.features.contains(&tag)
    }

    /// One descriptor per line, `name<TAB>count`, in [`DESCRIPTOR_NAMES`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for name in DESCRIPTOR_NAMES {
            let _ = writeln!(out, "{name}\t{}", self.get(name));
        }
        out
    }

    /// `(relation, tail)` pairs for a ligand: one `MD:<name>=<count>` tail per
    /// non-zero descriptor (relation = descriptor name) and one `CF:<tag>`
    /// tail per feature tag.
    pub fn kg_tails(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = DESCRIPTOR_NAMES
            .iter()
            .filter(|n| self.get(n) > 0)
            .map(|n| (n.to_string(), format!("MD:{n}={}", self.get(n))))
            .collect();
        out.extend(self.features.iter().map(|t| (FEATURE_RELATION.to_string(), format!("CF:{t}"))));
        out
    }
}

fn is_n_or_o(e: Element) -> bool {
    e == Element::N || e == Element::O
}

pub fn is_donor(graph: &MolecularGraph, i: usize) -> bool {
    is_n_or_o(graph.atom(i).element) && graph.total_hs(i) > 0
}

pub fn is_acceptor(graph: &MolecularGraph, i: usize) -> bool {
    let a = graph.atom(i);
    if !is_n_or_o(a.element) || a.charge > 0 {
        return false;
    }
    if a.element == Element::N && a.aromatic && graph.degree(i) + a.implicit_hs as usize >= 3 {
        return false;
    }
    true
}

fn is_rotatable(graph: &MolecularGraph, k: usize) -> bool {
    let b = &graph.bonds()[k];
    if b.order != BondOrder::Single || graph.is_ring_bond(k) {
        return false;
    }
    let heavy = |i: usize| graph.atom(i).element != Element::H;
    heavy(b.a) && heavy(b.b) && graph.heavy_degree(b.a) >= 2 && graph.heavy_degree(b.b) >= 2
}

fn is_hydrophobe(graph: &MolecularGraph, i: usize) -> bool {
    let e = graph.atom(i).element;
    if matches!(e, Element::CL | Element::BR | Element::I) {
        return true;
    }
    e == Element::C
        && graph
            .neighbors(i)
            .iter()
            .all(|&(j, _)| matches!(graph.atom(j).element, Element::C | Element::H))
}

pub fn extract_ligand_properties(graph: &MolecularGraph) -> LigandPropertySet {
    let n = graph.atom_count();
    let count = |pred: &dyn Fn(usize) -> bool| (0..n).filter(|&i| pred(i)).count() as u32;

    let mut rings = [0u32; 4];
    for ring in graph.sssr() {
        let aromatic = ring.iter().all(|&i| graph.atom(i).aromatic);
        let carbo = ring.iter().all(|&i| graph.atom(i).element == Element::C);
        rings[usize::from(!aromatic) * 2 + usize::from(!carbo)] += 1;
    }

    let donors = count(&|i| is_donor(graph, i));
    let acceptors = count(&|i| is_acceptor(graph, i));
    let positive = count(&|i| graph.atom(i).charge > 0);
    let negative = count(&|i| graph.atom(i).charge < 0);
    let values = [
        donors,
        acceptors,
        rings[0],
        rings[1],
        rings[2],
        rings[3],
        (0..graph.bond_count()).filter(|&k| is_rotatable(graph, k)).count() as u32,
        count(&|i| graph.atom(i).chirality != super::Chirality::None),
        count(&|i| !matches!(graph.atom(i).element, Element::C | Element::H)),
        positive,
        negative,
    ];
    let descriptors = DESCRIPTOR_NAMES.iter().copied().zip(values).collect();

    let flags = [
        (0..n).any(|i| is_hydrophobe(graph, i)),
        positive > 0,
        negative > 0,
        donors > 0,
        acceptors > 0,
        (0..n).any(|i| graph.atom(i).aromatic),
    ];
    let features = FEATURE_TAGS.iter().zip(flags).filter(|(_, f)| *f).map(|(t, _)| *t).collect();
    LigandPropertySet { descriptors, features }
}

/// `L:<ligand_id><TAB>relation<TAB>tail` lines for one ligand.
pub fn ligand_triples(ligand_id: &str, props: &LigandPropertySet) -> Vec<String> {
    props
        .kg_tails()
        .into_iter()
        .map(|(r, t)| format!("L:{ligand_id}\t{r}\t{t}"))
        .collect()
}
