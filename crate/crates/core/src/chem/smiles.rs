//! SMILES reader for the subset used by ligand datasets.
//!
//! Supported: organic-subset and bracket atoms (isotope, `@`/`@@`, H count,
//! charge, atom class), bonds `- = # :`, branches, ring closures `0-9` and
//! `%nn`, and `.` for disconnected parts. Rejected with an error: wildcard
//! `*`, reaction arrows, `/` `\` double-bond marks and quadruple bonds.

use std::collections::BTreeMap;

use super::{Atom, Bond, BondOrder, ChemError, Chirality, Element, MolecularGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmilesErrorKind {
    Empty,
    NonAscii,
    UnknownSymbol(String),
    UnmatchedRingClosure(u16),
    UnclosedBranch,
    UnmatchedParenthesis,
    /// Bond symbol or branch with nothing to attach to.
    Dangling(char),
    ConflictingRingBond(u16),
    Unsupported(&'static str),
    Syntax(String),
    Valence { element: String, valence: u32 },
    Structure(String),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

impl std::fmt::Display for SmilesError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use SmilesErrorKind::*;
        write!(f, "at byte {}: ", self.offset)?;
        match &self.kind {
            Empty => write!(f, "empty SMILES"),
            NonAscii => write!(f, "non-ASCII input"),
            UnknownSymbol(s) => write!(f, "unknown atom symbol '{s}'"),
            UnmatchedRingClosure(n) => write!(f, "ring closure {n} is never closed"),
            UnclosedBranch => write!(f, "unclosed branch"),
            UnmatchedParenthesis => write!(f, "')' without matching '('"),
            Dangling(c) => write!(f, "'{c}' has no preceding atom"),
            ConflictingRingBond(n) => write!(f, "ring closure {n} has conflicting bond orders"),
            Unsupported(what) => write!(f, "unsupported SMILES feature: {what}"),
            Syntax(s) => write!(f, "{s}"),
            Valence { element, valence } => write!(f, "valence violation: {element} with valence {valence}"),
            Structure(s) => write!(f, "{s}"),
        }
    }
}

impl std::error::Error for SmilesError {}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    /// (a, b, explicit order) in input order.
    bonds: Vec<(usize, usize, Option<BondOrder>)>,
    ring_open: BTreeMap<u16, (usize, Option<BondOrder>, usize)>,
}

fn err(offset: usize, kind: SmilesErrorKind) -> SmilesError {
    SmilesError { offset, kind }
}

/// Parses a SMILES string into a validated graph with implicit hydrogens.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    let start = text.len() - text.trim_start().len();
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err(0, SmilesErrorKind::Empty));
    }
    if let Some(i) = trimmed.bytes().position(|b| !b.is_ascii()) {
        return Err(err(start + i, SmilesErrorKind::NonAscii));
    }
    let mut p = Parser {
        text: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_offsets: Vec::new(),
        bonds: Vec::new(),
        ring_open: BTreeMap::new(),
    };
    p.run().map_err(|e| SmilesError { offset: e.offset + start, ..e })?;
    p.finish().map_err(|e| SmilesError { offset: e.offset + start, ..e })
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branch_stack: Vec<(usize, usize)> = Vec::new();
        let mut pending_bond: Option<(BondOrder, usize)> = None;

        while let Some(c) = self.peek() {
            let here = self.pos;
            match c {
                b'(' => {
                    let Some(p) = prev else {
                        return Err(err(here, SmilesErrorKind::Dangling('(')));
                    };
                    if pending_bond.is_some() {
                        return Err(err(here, SmilesErrorKind::Syntax("bond symbol before '('".into())));
                    }
                    branch_stack.push((p, here));
                    self.pos += 1;
                }
                b')' => {
                    let Some((p, _)) = branch_stack.pop() else {
                        return Err(err(here, SmilesErrorKind::UnmatchedParenthesis));
                    };
                    if let Some((_, at)) = pending_bond {
                        return Err(err(at, SmilesErrorKind::Syntax("bond symbol at end of branch".into())));
                    }
                    prev = Some(p);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if prev.is_none() {
                        return Err(err(here, SmilesErrorKind::Dangling(c as char)));
                    }
                    if pending_bond.is_some() {
                        return Err(err(here, SmilesErrorKind::Syntax("two bond symbols in a row".into())));
                    }
                    let order = match c {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        _ => BondOrder::Aromatic,
                    };
                    pending_bond = Some((order, here));
                    self.pos += 1;
                }
                b'$' => return Err(err(here, SmilesErrorKind::Unsupported("quadruple bond"))),
                b'/' | b'\\' => return Err(err(here, SmilesErrorKind::Unsupported("cis/trans bond marks"))),
                b'>' => return Err(err(here, SmilesErrorKind::Unsupported("reaction syntax"))),
                b'*' => return Err(err(here, SmilesErrorKind::Unsupported("wildcard atom"))),
                b'.' => {
                    if pending_bond.is_some() {
                        return Err(err(here, SmilesErrorKind::Syntax("bond symbol before '.'".into())));
                    }
                    if prev.is_none() {
                        return Err(err(here, SmilesErrorKind::Dangling('.')));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(p) = prev else {
                        return Err(err(here, SmilesErrorKind::Dangling(c as char)));
                    };
                    let label = self.ring_label()?;
                    let bond = pending_bond.take().map(|(o, _)| o);
                    self.ring_closure(p, label, bond, here)?;
                }
                _ => {
                    let atom = if c == b'[' { self.bracket_atom()? } else { self.organic_atom()? };
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    self.atom_offsets.push(here);
                    if let Some(p) = prev {
                        let order = pending_bond.take().map(|(o, _)| o);
                        self.bonds.push((p, idx, order));
                    } else if let Some((_, at)) = pending_bond {
                        return Err(err(at, SmilesErrorKind::Dangling('-')));
                    }
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, at)) = pending_bond {
            return Err(err(at, SmilesErrorKind::Syntax("SMILES ends with a bond symbol".into())));
        }
        if let Some(&(_, at)) = branch_stack.last() {
            return Err(err(at, SmilesErrorKind::UnclosedBranch));
        }
        if let Some((&label, &(_, _, at))) = self.ring_open.iter().next() {
            return Err(err(at, SmilesErrorKind::UnmatchedRingClosure(label)));
        }
        Ok(())
    }

    fn ring_label(&mut self) -> Result<u16, SmilesError> {
        let here = self.pos;
        if self.peek() == Some(b'%') {
            let digits = self.text.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u16)
                }
                _ => Err(err(here, SmilesErrorKind::Syntax("'%' must be followed by two digits".into()))),
            }
        } else {
            let d = self.peek().expect("digit") - b'0';
            self.pos += 1;
            Ok(d as u16)
        }
    }

    fn ring_closure(&mut self, atom: usize, label: u16, bond: Option<BondOrder>, at: usize) -> Result<(), SmilesError> {
        match self.ring_open.remove(&label) {
            None => {
                self.ring_open.insert(label, (atom, bond, at));
                Ok(())
            }
            Some((open, open_bond, _)) => {
                if open == atom {
                    return Err(err(at, SmilesErrorKind::Structure(format!("ring closure {label} bonds an atom to itself"))));
                }
                let order = match (open_bond, bond) {
                    (Some(a), Some(b)) if a != b => return Err(err(at, SmilesErrorKind::ConflictingRingBond(label))),
                    (a, b) => a.or(b),
                };
                if self.bonds.iter().any(|&(x, y, _)| (x == open && y == atom) || (x == atom && y == open)) {
                    return Err(err(at, SmilesErrorKind::Structure(format!("ring closure {label} duplicates an existing bond"))));
                }
                self.bonds.push((open, atom, order));
                Ok(())
            }
        }
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let here = self.pos;
        let rest = &self.text[self.pos..];
        let (symbol, aromatic, len) = match rest {
            [b'C', b'l', ..] => ("Cl", false, 2),
            [b'B', b'r', ..] => ("Br", false, 2),
            [b'B', ..] => ("B", false, 1),
            [b'C', ..] => ("C", false, 1),
            [b'N', ..] => ("N", false, 1),
            [b'O', ..] => ("O", false, 1),
            [b'P', ..] => ("P", false, 1),
            [b'S', ..] => ("S", false, 1),
            [b'F', ..] => ("F", false, 1),
            [b'I', ..] => ("I", false, 1),
            [b'b', ..] => ("B", true, 1),
            [b'c', ..] => ("C", true, 1),
            [b'n', ..] => ("N", true, 1),
            [b'o', ..] => ("O", true, 1),
            [b'p', ..] => ("P", true, 1),
            [b's', ..] => ("S", true, 1),
            _ => {
                let c = rest[0] as char;
                return Err(err(here, SmilesErrorKind::UnknownSymbol(c.to_string())));
            }
        };
        self.pos += len;
        let mut atom = Atom::new(Element::from_symbol(symbol).expect("organic subset"));
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let Some(close) = self.text[self.pos..].iter().position(|&b| b == b']') else {
            return Err(err(open, SmilesErrorKind::Syntax("unterminated bracket atom".into())));
        };
        let end = self.pos + close;

        let mut isotope = None;
        let digits = self.take_digits(end);
        if !digits.is_empty() {
            isotope = Some(digits.parse::<u16>().map_err(|_| {
                err(open + 1, SmilesErrorKind::Syntax("isotope out of range".into()))
            })?);
        }

        let sym_at = self.pos;
        let (element, aromatic) = self.bracket_symbol(end)?;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        atom.bracket = true;
        atom.isotope = isotope;

        if self.peek() == Some(b'@') && self.pos < end {
            self.pos += 1;
            if self.peek() == Some(b'@') && self.pos < end {
                self.pos += 1;
                atom.chirality = Chirality::Clockwise;
            } else {
                atom.chirality = Chirality::CounterClockwise;
            }
            if self.pos < end && self.text[self.pos].is_ascii_uppercase() && self.text[self.pos] != b'H' {
                return Err(err(self.pos, SmilesErrorKind::Unsupported("non-tetrahedral chirality classes")));
            }
        }

        if self.pos < end && self.peek() == Some(b'H') {
            self.pos += 1;
            let d = self.take_digits(end);
            atom.implicit_hs = if d.is_empty() { 1 } else { d.parse().unwrap_or(u8::MAX) };
        }

        if self.pos < end && matches!(self.peek(), Some(b'+') | Some(b'-')) {
            let sign_char = self.peek().expect("sign");
            let sign: i32 = if sign_char == b'+' { 1 } else { -1 };
            self.pos += 1;
            let d = self.take_digits(end);
            let magnitude = if !d.is_empty() {
                d.parse::<i32>().unwrap_or(i32::MAX)
            } else {
                let mut m = 1;
                while self.pos < end && self.peek() == Some(sign_char) {
                    m += 1;
                    self.pos += 1;
                }
                m
            };
            if magnitude > 15 {
                return Err(err(sym_at, SmilesErrorKind::Syntax("formal charge out of range".into())));
            }
            atom.charge = (sign * magnitude) as i8;
        }

        if self.pos < end && self.peek() == Some(b':') {
            self.pos += 1;
            if self.take_digits(end).is_empty() {
                return Err(err(self.pos, SmilesErrorKind::Syntax("atom class needs digits".into())));
            }
        }

        if self.pos != end {
            return Err(err(self.pos, SmilesErrorKind::Syntax(format!(
                "unexpected '{}' in bracket atom",
                self.text[self.pos] as char
            ))));
        }
        self.pos = end + 1;
        Ok(atom)
    }

    fn take_digits(&mut self, end: usize) -> String {
        let s = self.pos;
        while self.pos < end && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.text[s..self.pos]).into_owned()
    }

    fn bracket_symbol(&mut self, end: usize) -> Result<(Element, bool), SmilesError> {
        let here = self.pos;
        let rest = &self.text[self.pos..end];
        if rest.is_empty() {
            return Err(err(here, SmilesErrorKind::Syntax("bracket atom without element".into())));
        }
        if rest[0] == b'*' {
            return Err(err(here, SmilesErrorKind::Unsupported("wildcard atom")));
        }
        for (sym, el) in [("se", "Se"), ("as", "As"), ("te", "Te")] {
            if rest.starts_with(sym.as_bytes()) {
                self.pos += 2;
                return Ok((Element::from_symbol(el).expect("known"), true));
            }
        }
        if rest[0].is_ascii_lowercase() {
            let el = match rest[0] {
                b'b' => "B",
                b'c' => "C",
                b'n' => "N",
                b'o' => "O",
                b'p' => "P",
                b's' => "S",
                other => {
                    return Err(err(here, SmilesErrorKind::UnknownSymbol((other as char).to_string())));
                }
            };
            self.pos += 1;
            return Ok((Element::from_symbol(el).expect("known"), true));
        }
        if !rest[0].is_ascii_uppercase() {
            return Err(err(here, SmilesErrorKind::UnknownSymbol((rest[0] as char).to_string())));
        }
        if rest.len() >= 2 && rest[1].is_ascii_lowercase() {
            let two = std::str::from_utf8(&rest[..2]).expect("ascii");
            if let Some(e) = Element::from_symbol(two) {
                self.pos += 2;
                return Ok((e, false));
            }
        }
        let one = std::str::from_utf8(&rest[..1]).expect("ascii");
        match Element::from_symbol(one) {
            Some(e) => {
                self.pos += 1;
                Ok((e, false))
            }
            None => {
                let len = if rest.len() >= 2 && rest[1].is_ascii_lowercase() { 2 } else { 1 };
                let s = String::from_utf8_lossy(&rest[..len]).into_owned();
                Err(err(here, SmilesErrorKind::UnknownSymbol(s)))
            }
        }
    }

    fn finish(self) -> Result<MolecularGraph, SmilesError> {
        let offsets = self.atom_offsets;
        let atoms = self.atoms;
        let mut bonds = Vec::with_capacity(self.bonds.len());
        for &(a, b, order) in &self.bonds {
            let both_aromatic = atoms[a].aromatic && atoms[b].aromatic;
            let order = match order {
                Some(BondOrder::Aromatic) if !both_aromatic => {
                    return Err(err(
                        offsets[a.max(b)],
                        SmilesErrorKind::Structure("aromatic bond between non-aromatic atoms".into()),
                    ));
                }
                Some(o) => o,
                None if both_aromatic => BondOrder::Aromatic,
                None => BondOrder::Single,
            };
            bonds.push(Bond { a, b, order });
        }

        let structure = |e: ChemError| match e {
            ChemError::Valence { atom, element, valence } => {
                err(offsets[atom], SmilesErrorKind::Valence { element, valence })
            }
            ChemError::Graph(msg) => err(0, SmilesErrorKind::Structure(msg)),
            other => err(0, SmilesErrorKind::Structure(other.to_string())),
        };

        // Implied aromatic bonds that turn out not to lie on a ring are single.
        let probe = MolecularGraph::assemble(atoms.clone(), bonds.clone()).map_err(structure)?;
        for (k, bond) in bonds.iter_mut().enumerate() {
            if bond.order == BondOrder::Aromatic && !probe.is_ring_bond(k) {
                let explicit = self.bonds[k].2 == Some(BondOrder::Aromatic);
                if explicit {
                    return Err(err(
                        offsets[bond.a.max(bond.b)],
                        SmilesErrorKind::Structure("aromatic bond outside a ring".into()),
                    ));
                }
                bond.order = BondOrder::Single;
            }
        }

        let mut g = MolecularGraph::with_standard_hydrogens(atoms, bonds).map_err(structure)?;
        g.assign_bracket_radicals();
        Ok(g)
    }
}

impl MolecularGraph {
    /// Neutral-or-charged bracket atoms left below their lowest allowed
    /// valence carry the deficit as radical electrons (`[CH3]`, `[O]`).
    fn assign_bracket_radicals(&mut self) {
        let updates: Vec<(usize, u8)> = (0..self.atom_count())
            .filter_map(|i| {
                let a = self.atom(i);
                if !a.bracket || a.aromatic {
                    return None;
                }
                let allowed = a.element.allowed_valences(a.charge as i32)?;
                let used = self.bonded_valence(i) + a.implicit_hs as u32;
                let low = allowed[0] as u32;
                (used < low).then(|| (i, (low - used) as u8))
            })
            .collect();
        for (i, r) in updates {
            self.set_radicals(i, r);
        }
    }
}
