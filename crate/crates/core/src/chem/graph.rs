//! Molecular graph, ring perception and structural invariants.

use std::collections::{HashSet, VecDeque};

use super::{ChemError, Element};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the bonded valence; an aromatic bond counts as one.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn code(self) -> u64 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Tetrahedral mark as written; recorded, never featurized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Chirality {
    #[default]
    None,
    CounterClockwise,
    Clockwise,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Hydrogens attached to this atom that are not graph nodes.
    pub implicit_hs: u8,
    pub radical_electrons: u8,
    /// Written inside brackets; hydrogen count was explicit.
    pub bracket: bool,
    pub isotope: Option<u16>,
    pub chirality: Chirality,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Self {
            element,
            charge: 0,
            aromatic: false,
            implicit_hs: 0,
            radical_electrons: 0,
            bracket: false,
            isotope: None,
            chirality: Chirality::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Ligand graph: atoms as nodes, bonds as undirected edges.
#[derive(Clone, Debug, PartialEq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: (neighbor, bond index), in bond insertion order.
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
}

impl MolecularGraph {
    /// Builds a graph and checks endpoint, duplicate-bond, valence and
    /// aromatic-ring invariants. Hydrogen counts are taken as given.
    pub fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        let g = Self::assemble(atoms, bonds)?;
        g.validate()?;
        Ok(g)
    }

    /// Builds a graph and fills `implicit_hs` of every non-bracket atom from
    /// the standard valence table.
    pub fn with_standard_hydrogens(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        let mut g = Self::assemble(atoms, bonds)?;
        for i in 0..g.atoms.len() {
            if !g.atoms[i].bracket {
                let h = g.standard_implicit_hs(i).ok_or_else(|| ChemError::Valence {
                    atom: i,
                    element: g.atoms[i].element.symbol().to_string(),
                    valence: g.bonded_valence(i),
                })?;
                g.atoms[i].implicit_hs = h;
            }
        }
        g.validate()?;
        Ok(g)
    }

    pub(crate) fn assemble(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        let n = atoms.len();
        let mut seen = HashSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for (k, b) in bonds.iter().enumerate() {
            if b.a >= n || b.b >= n {
                return Err(ChemError::Graph(format!("bond {k} references a missing atom")));
            }
            if b.a == b.b {
                return Err(ChemError::Graph(format!("bond {k} joins atom {} to itself", b.a)));
            }
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(ChemError::Graph(format!("duplicate bond between atoms {} and {}", b.a, b.b)));
            }
            adjacency[b.a].push((b.b, k));
            adjacency[b.b].push((b.a, k));
        }
        let mut g = Self { atoms, bonds, adjacency, ring_bond: Vec::new() };
        g.ring_bond = g.find_ring_bonds();
        Ok(g)
    }

    fn validate(&self) -> Result<(), ChemError> {
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.aromatic && !self.atom_in_ring(i) {
                return Err(ChemError::Graph(format!(
                    "aromatic atom {i} ({}) is not in a ring",
                    atom.element.symbol()
                )));
            }
            let total = self.bonded_valence(i) + atom.implicit_hs as u32;
            if let Some(allowed) = atom.element.allowed_valences(atom.charge as i32) {
                let max = *allowed.last().expect("non-empty valence list") as u32;
                if total > max {
                    return Err(ChemError::Valence {
                        atom: i,
                        element: atom.element.symbol().to_string(),
                        valence: total,
                    });
                }
            }
        }
        Ok(())
    }

    /// Implicit hydrogens implied by the standard valence table for an
    /// unbracketed atom; `None` when the bonded valence exceeds every
    /// allowed valence. Aromatic atoms reserve one valence unit for the
    /// ring pi system when room remains.
    pub(crate) fn standard_implicit_hs(&self, i: usize) -> Option<u8> {
        let atom = &self.atoms[i];
        let sum = self.bonded_valence(i);
        let allowed = atom.element.allowed_valences(atom.charge as i32)?;
        let target = allowed.iter().map(|&v| v as u32).find(|&v| v >= sum)?;
        let pi = u32::from(atom.aromatic);
        Some(target.saturating_sub(sum + pi) as u8)
    }

    pub(crate) fn set_radicals(&mut self, i: usize, radicals: u8) {
        self.atoms[i].radical_electrons = radicals;
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    /// Number of explicit (graph) neighbors.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn heavy_degree(&self, i: usize) -> usize {
        self.adjacency[i]
            .iter()
            .filter(|(j, _)| self.atoms[*j].element != Element::H)
            .count()
    }

    /// Graph-node hydrogens plus implicit ones.
    pub fn total_hs(&self, i: usize) -> usize {
        let explicit = self.adjacency[i]
            .iter()
            .filter(|(j, _)| self.atoms[*j].element == Element::H)
            .count();
        explicit + self.atoms[i].implicit_hs as usize
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|(j, _)| *j == b)
            .map(|(_, k)| &self.bonds[*k])
    }

    /// Sum of bond valences at atom `i` (aromatic bonds count one).
    pub fn bonded_valence(&self, i: usize) -> u32 {
        self.adjacency[i]
            .iter()
            .map(|(_, k)| self.bonds[*k].order.valence() as u32)
            .sum()
    }

    pub fn is_ring_bond(&self, k: usize) -> bool {
        self.ring_bond[k]
    }

    pub fn atom_in_ring(&self, i: usize) -> bool {
        self.adjacency[i].iter().any(|(_, k)| self.ring_bond[*k])
    }

    /// Number of independent cycles: E - V + components.
    pub fn cyclomatic_number(&self) -> usize {
        (self.bonds.len() + self.component_count()).saturating_sub(self.atoms.len())
    }

    pub fn component_count(&self) -> usize {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    /// Same molecule with atoms reordered: new atom `i` is old atom `order[i]`.
    pub fn relabeled(&self, order: &[usize]) -> Result<Self, ChemError> {
        let n = self.atoms.len();
        let mut inverse = vec![usize::MAX; n];
        if order.len() != n {
            return Err(ChemError::Graph("relabeling must be a permutation".into()));
        }
        for (new, &old) in order.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(ChemError::Graph("relabeling must be a permutation".into()));
            }
            inverse[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond { a: inverse[b.a], b: inverse[b.b], order: b.order })
            .collect();
        Self::from_parts(atoms, bonds)
    }

    /// Bridge detection; a bond lies on a ring iff it is not a bridge.
    fn find_ring_bonds(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut ring = vec![true; self.bonds.len()];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // Iterative DFS: (vertex, parent bond, next neighbor index).
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (u, pb, ref mut next)) = stack.last_mut() {
                if *next < self.adjacency[u].len() {
                    let (v, k) = self.adjacency[u][*next];
                    *next += 1;
                    if k == pb {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, k, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            ring[pb] = false;
                        }
                    }
                }
            }
        }
        ring
    }

    /// Smallest set of smallest rings, each as an ordered atom cycle.
    ///
    /// Candidates are shortest cycles through each ring bond, widened to
    /// Horton's vertex/edge family when they do not span the cycle space;
    /// the shortest linearly independent ones (over GF(2) on bonds) win.
    pub fn sssr(&self) -> Vec<Vec<usize>> {
        let target = self.cyclomatic_number();
        if target == 0 {
            return Vec::new();
        }
        let mut candidates: Vec<Vec<usize>> = Vec::new();
        for (k, b) in self.bonds.iter().enumerate() {
            if !self.ring_bond[k] {
                continue;
            }
            if let Some(path) = self.shortest_path(b.b, b.a, Some(k)) {
                candidates.push(path);
            }
        }
        let mut rings = self.select_independent(&mut candidates, target);
        if rings.len() < target {
            let mut horton = candidates;
            for v in 0..self.atoms.len() {
                if !self.atom_in_ring(v) {
                    continue;
                }
                let parents = self.bfs_parents(v);
                for b in &self.bonds {
                    let (Some(px), Some(py)) = (self.path_from(&parents, v, b.a), self.path_from(&parents, v, b.b))
                    else {
                        continue;
                    };
                    // Paths must share only `v`.
                    let set: HashSet<_> = px.iter().skip(1).collect();
                    if py.iter().skip(1).any(|a| set.contains(a)) {
                        continue;
                    }
                    let mut cycle = px.clone();
                    cycle.extend(py.iter().skip(1).rev());
                    if cycle.len() >= 3 {
                        horton.push(cycle);
                    }
                }
            }
            rings = self.select_independent(&mut horton, target);
        }
        rings
    }

    fn select_independent(&self, candidates: &mut Vec<Vec<usize>>, target: usize) -> Vec<Vec<usize>> {
        candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        candidates.dedup();
        let words = self.bonds.len().div_ceil(64);
        let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
        let mut rings = Vec::new();
        let mut seen_sets = HashSet::new();
        for cycle in candidates.iter() {
            if rings.len() == target {
                break;
            }
            let Some(mut vec) = self.cycle_bits(cycle, words) else { continue };
            if !seen_sets.insert(vec.clone()) {
                continue;
            }
            for (pivot, row) in &basis {
                if vec[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    for (x, y) in vec.iter_mut().zip(row) {
                        *x ^= y;
                    }
                }
            }
            if let Some(pivot) = first_bit(&vec) {
                basis.push((pivot, vec));
                rings.push(cycle.clone());
            }
        }
        rings
    }

    fn cycle_bits(&self, cycle: &[usize], words: usize) -> Option<Vec<u64>> {
        let mut bits = vec![0u64; words];
        for i in 0..cycle.len() {
            let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            let &(_, k) = self.adjacency[a].iter().find(|(j, _)| *j == b)?;
            bits[k / 64] |= 1 << (k % 64);
        }
        Some(bits)
    }

    /// Shortest path from `from` to `to` avoiding bond `skip`, as atom list.
    fn shortest_path(&self, from: usize, to: usize, skip: Option<usize>) -> Option<Vec<usize>> {
        let n = self.atoms.len();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut c = to;
                while c != from {
                    c = prev[c];
                    path.push(c);
                }
                path.reverse();
                return Some(path);
            }
            for &(v, k) in &self.adjacency[u] {
                if Some(k) == skip || seen[v] {
                    continue;
                }
                seen[v] = true;
                prev[v] = u;
                queue.push_back(v);
            }
        }
        None
    }

    fn bfs_parents(&self, root: usize) -> Vec<usize> {
        let n = self.atoms.len();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        prev
    }

    fn path_from(&self, parents: &[usize], root: usize, to: usize) -> Option<Vec<usize>> {
        let mut path = vec![to];
        let mut c = to;
        while c != root {
            c = parents[c];
            if c == usize::MAX {
                return None;
            }
            path.push(c);
        }
        path.reverse();
        Some(path)
    }
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}
