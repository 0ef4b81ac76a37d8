//! Complex datasets in TSV form.

use std::collections::BTreeMap;
use std::path::Path;

use crate::chem::{parse_smiles, MolecularGraph};

use super::DatasetError;

pub const DATASET_HEADER: [&str; 6] = ["id", "protein_id", "sequence", "ligand_id", "smiles", "affinity"];

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSample {
    pub id: String,
    pub protein_id: String,
    pub sequence: String,
    pub ligand_id: String,
    pub smiles: String,
    /// pK units.
    pub affinity: f64,
}

/// Validated samples plus one parsed graph per ligand.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    samples: Vec<ComplexSample>,
    by_id: BTreeMap<String, usize>,
    graphs: BTreeMap<String, MolecularGraph>,
}

impl Dataset {
    pub fn from_samples(samples: Vec<ComplexSample>) -> Result<Self, DatasetError> {
        let mut ds = Dataset::default();
        let mut sequences: BTreeMap<String, String> = BTreeMap::new();
        let mut smiles: BTreeMap<String, String> = BTreeMap::new();
        for (row, s) in samples.into_iter().enumerate() {
            let line = row + 2;
            let bad = |msg: String| DatasetError::Malformed { line, msg };
            if !s.affinity.is_finite() {
                return Err(bad(format!("affinity of {} is not finite", s.id)));
            }
            if [&s.id, &s.protein_id, &s.sequence, &s.ligand_id, &s.smiles].iter().any(|f| f.trim().is_empty()) {
                return Err(bad("empty field".into()));
            }
            if ds.by_id.contains_key(&s.id) {
                return Err(DatasetError::Duplicate { line, id: s.id });
            }
            if let Some(prev) = sequences.insert(s.protein_id.clone(), s.sequence.clone()) {
                if prev != s.sequence {
                    return Err(bad(format!("protein {} has conflicting sequences", s.protein_id)));
                }
            }
            if let Some(prev) = smiles.insert(s.ligand_id.clone(), s.smiles.clone()) {
                if prev != s.smiles {
                    return Err(bad(format!("ligand {} has conflicting SMILES", s.ligand_id)));
                }
            }
            if !ds.graphs.contains_key(&s.ligand_id) {
                let g = parse_smiles(&s.smiles).map_err(|e| DatasetError::Smiles { sample: s.id.clone(), source: e })?;
                ds.graphs.insert(s.ligand_id.clone(), g);
            }
            ds.by_id.insert(s.id.clone(), ds.samples.len());
            ds.samples.push(s);
        }
        Ok(ds)
    }

    /// Parses a TSV with the [`DATASET_HEADER`] columns.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(DatasetError::Empty)?;
        let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
        if cols != DATASET_HEADER {
            return Err(DatasetError::Malformed { line: 1, msg: format!("header must be {}", DATASET_HEADER.join(" ")) });
        }
        let mut samples = Vec::new();
        let mut line_of = Vec::new();
        for (n, line) in lines {
            let line_no = n + 1;
            let f: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
            if f.len() != 6 {
                return Err(DatasetError::Malformed { line: line_no, msg: format!("expected 6 fields, got {}", f.len()) });
            }
            let affinity: f64 = f[5]
                .trim()
                .parse()
                .map_err(|_| DatasetError::Malformed { line: line_no, msg: format!("bad affinity {:?}", f[5]) })?;
            samples.push(ComplexSample {
                id: f[0].trim().into(),
                protein_id: f[1].trim().into(),
                sequence: f[2].trim().into(),
                ligand_id: f[3].trim().into(),
                smiles: f[4].trim().into(),
                affinity,
            });
            line_of.push(line_no);
        }
        Self::from_samples(samples).map_err(|e| e.relined(&line_of))
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[ComplexSample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &ComplexSample {
        &self.samples[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn graph(&self, ligand_id: &str) -> Option<&MolecularGraph> {
        self.graphs.get(ligand_id)
    }

    /// Protein ids in order of first appearance.
    pub fn protein_ids(&self) -> Vec<&str> {
        first_appearance(self.samples.iter().map(|s| s.protein_id.as_str()))
    }

    /// Ligand ids in order of first appearance.
    pub fn ligand_ids(&self) -> Vec<&str> {
        first_appearance(self.samples.iter().map(|s| s.ligand_id.as_str()))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = DATASET_HEADER.join("\t");
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                s.id, s.protein_id, s.sequence, s.ligand_id, s.smiles, s.affinity
            ));
        }
        out
    }
}

fn first_appearance<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = std::collections::HashSet::new();
    ids.filter(|id| seen.insert(*id)).collect()
}
