//! Random valid molecules for property tests and demos.

use rand::Rng;

use super::{Atom, Bond, BondOrder, Element, MolecularGraph};

fn max_valence(e: Element) -> u32 {
    match e {
        Element::C => 4,
        Element::N => 3,
        Element::O | Element::S => 2,
        _ => 1,
    }
}

/// A connected molecule with `n_atoms` heavy atoms (at least 1) drawn from
/// C, N, O, S, F, Cl. A spanning tree is grown first, then a few ring
/// closures and double bonds are added where valence allows.
pub fn random_molecule<R: Rng + ?Sized>(rng: &mut R, n_atoms: usize) -> MolecularGraph {
    let n = n_atoms.max(1);
    let pick = |rng: &mut R, leaf_ok: bool| {
        let r: f64 = rng.gen();
        match r {
            r if r < 0.6 => Element::C,
            r if r < 0.75 => Element::N,
            r if r < 0.87 => Element::O,
            r if r < 0.92 => Element::S,
            r if r < 0.96 && leaf_ok => Element::F,
            _ if leaf_ok => Element::CL,
            _ => Element::C,
        }
    };
    let mut elements = vec![pick(rng, false)];
    let mut used = vec![0u32];
    let mut bonds: Vec<Bond> = Vec::new();
    while elements.len() < n {
        let open: Vec<usize> = (0..elements.len()).filter(|&i| used[i] < max_valence(elements[i])).collect();
        let Some(&parent) = open.get(rng.gen_range(0..open.len().max(1))) else { break };
        let e = pick(rng, true);
        let child = elements.len();
        elements.push(e);
        used.push(1);
        used[parent] += 1;
        bonds.push(Bond { a: parent, b: child, order: BondOrder::Single });
    }
    let linked = |bonds: &[Bond], a: usize, b: usize| bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a));
    for _ in 0..rng.gen_range(0..=n / 4) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b
            && !linked(&bonds, a, b)
            && used[a] < max_valence(elements[a])
            && used[b] < max_valence(elements[b])
        {
            used[a] += 1;
            used[b] += 1;
            bonds.push(Bond { a, b, order: BondOrder::Single });
        }
    }
    for k in 0..bonds.len() {
        let (a, b) = (bonds[k].a, bonds[k].b);
        if rng.gen_bool(0.15) && used[a] < max_valence(elements[a]) && used[b] < max_valence(elements[b]) {
            used[a] += 1;
            used[b] += 1;
            bonds[k].order = BondOrder::Double;
        }
    }
    let atoms = elements.into_iter().map(Atom::new).collect();
    MolecularGraph::with_standard_hydrogens(atoms, bonds).expect("generated within valence limits")
}
