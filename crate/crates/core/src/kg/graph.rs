//! Typed biochemical knowledge graph.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use super::KgError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Protein,
    Ligand,
    BP,
    CC,
    MF,
    MD,
    CF,
}

impl EntityType {
    pub const ALL: [EntityType; 7] = [
        EntityType::Protein,
        EntityType::Ligand,
        EntityType::BP,
        EntityType::CC,
        EntityType::MF,
        EntityType::MD,
        EntityType::CF,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            EntityType::Protein => "P",
            EntityType::Ligand => "L",
            EntityType::BP => "BP",
            EntityType::CC => "CC",
            EntityType::MF => "MF",
            EntityType::MD => "MD",
            EntityType::CF => "CF",
        }
    }

    pub fn from_prefix(p: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.prefix() == p)
    }

    /// Type of a prefixed id such as `BP:0006915`.
    pub fn of_id(id: &str) -> Option<Self> {
        let (p, rest) = id.split_once(':')?;
        if rest.is_empty() {
            return None;
        }
        Self::from_prefix(p)
    }

    pub fn is_head(self) -> bool {
        matches!(self, EntityType::Protein | EntityType::Ligand)
    }

    pub fn is_go(self) -> bool {
        matches!(self, EntityType::BP | EntityType::CC | EntityType::MF)
    }

    pub fn is_lp(self) -> bool {
        matches!(self, EntityType::MD | EntityType::CF)
    }

    /// Whether a triple `head -> tail` of these types is allowed.
    pub fn accepts_tail(self, tail: EntityType) -> bool {
        match self {
            EntityType::Protein => tail.is_go(),
            EntityType::Ligand => tail.is_lp(),
            _ => false,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityType::Protein => "protein",
            EntityType::Ligand => "ligand",
            other => other.prefix(),
        })
    }
}

impl std::str::FromStr for EntityType {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, KgError> {
        match s {
            "protein" | "P" => Ok(EntityType::Protein),
            "ligand" | "L" => Ok(EntityType::Ligand),
            other => Self::from_prefix(other).ok_or_else(|| KgError::Lookup(format!("unknown entity type {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    /// Prefixed id, e.g. `P:P00533`.
    pub id: String,
    pub name: String,
    pub kind: EntityType,
}

/// Indices into the graph's entity and relation lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    entity_index: BTreeMap<String, usize>,
    relations: Vec<String>,
    relation_index: BTreeMap<String, usize>,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    by_head: BTreeMap<usize, Vec<usize>>,
}

/// Entity and triple counts by type.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KgSummary {
    pub entities: BTreeMap<EntityType, usize>,
    /// Triple counts keyed by tail type.
    pub triples: BTreeMap<EntityType, usize>,
    pub relations: usize,
}

impl KgSummary {
    pub fn entity_count(&self, t: EntityType) -> usize {
        self.entities.get(&t).copied().unwrap_or(0)
    }

    pub fn triple_count(&self, tail: EntityType) -> usize {
        self.triples.get(&tail).copied().unwrap_or(0)
    }

    pub fn protein_go(&self) -> usize {
        [EntityType::BP, EntityType::CC, EntityType::MF].iter().map(|&t| self.triple_count(t)).sum()
    }

    pub fn ligand_lp(&self) -> usize {
        [EntityType::MD, EntityType::CF].iter().map(|&t| self.triple_count(t)).sum()
    }

    /// `key<TAB>value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in EntityType::ALL {
            out.push_str(&format!("entities.{t}\t{}\n", self.entity_count(t)));
        }
        for t in EntityType::ALL.into_iter().filter(|t| !t.is_head()) {
            out.push_str(&format!("triples.{t}\t{}\n", self.triple_count(t)));
        }
        out.push_str(&format!("triples.protein_go\t{}\n", self.protein_go()));
        out.push_str(&format!("triples.ligand_lp\t{}\n", self.ligand_lp()));
        out.push_str(&format!("relations\t{}\n", self.relations));
        out
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `head<TAB>relation<TAB>tail` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, KgError> {
        let mut kg = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
                return Err(KgError::Malformed { line: line_no, msg: "expected head<TAB>relation<TAB>tail".into() });
            }
            kg.add_triple(fields[0].trim(), fields[1].trim(), fields[2].trim())
                .map_err(|e| e.at_line(line_no))?;
        }
        Ok(kg)
    }

    pub fn ingest_triples(path: &Path) -> Result<Self, KgError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn entity_slot(&mut self, id: &str) -> Result<usize, KgError> {
        if let Some(&i) = self.entity_index.get(id) {
            return Ok(i);
        }
        let kind = EntityType::of_id(id).ok_or_else(|| KgError::Malformed { line: 0, msg: format!("entity {id} lacks a known type prefix") })?;
        let name = id.split_once(':').map_or(id, |(_, n)| n).to_string();
        self.entities.push(Entity { id: id.to_string(), name, kind });
        self.entity_index.insert(id.to_string(), self.entities.len() - 1);
        Ok(self.entities.len() - 1)
    }

    fn relation_slot(&mut self, name: &str) -> usize {
        if let Some(&i) = self.relation_index.get(name) {
            return i;
        }
        self.relations.push(name.to_string());
        self.relation_index.insert(name.to_string(), self.relations.len() - 1);
        self.relations.len() - 1
    }

    pub fn add_triple(&mut self, head: &str, relation: &str, tail: &str) -> Result<(), KgError> {
        let bad_prefix = |id: &str| KgError::Malformed { line: 0, msg: format!("entity {id} lacks a known type prefix") };
        let hk = EntityType::of_id(head).ok_or_else(|| bad_prefix(head))?;
        let tk = EntityType::of_id(tail).ok_or_else(|| bad_prefix(tail))?;
        if !hk.is_head() {
            return Err(KgError::TypeRule { line: 0, msg: format!("head {head} must be a protein or ligand") });
        }
        if !hk.accepts_tail(tk) {
            return Err(KgError::TypeRule { line: 0, msg: format!("{hk} head {head} cannot take {tk} tail {tail}") });
        }
        let h = self.entity_slot(head)?;
        let t = self.entity_slot(tail)?;
        let r = self.relation_slot(relation);
        let triple = Triple { head: h, relation: r, tail: t };
        if !self.seen.insert(triple) {
            return Err(KgError::Duplicate { line: 0, triple: format!("{head}\t{relation}\t{tail}") });
        }
        self.triples.push(triple);
        self.by_head.entry(h).or_default().push(self.triples.len() - 1);
        Ok(())
    }

    /// Registers an entity that has no triples yet (e.g. a tail restored
    /// from a checkpoint).
    pub fn add_entity(&mut self, id: &str) -> Result<usize, KgError> {
        self.entity_slot(id)
    }

    pub fn add_relation(&mut self, name: &str) -> usize {
        self.relation_slot(name)
    }

    /// Applies display names from `id<TAB>name` lines.
    pub fn load_names(&mut self, text: &str) -> Result<(), KgError> {
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, name) = line
                .split_once('\t')
                .ok_or_else(|| KgError::Malformed { line: n + 1, msg: "expected id<TAB>name".into() })?;
            if let Some(&i) = self.entity_index.get(id.trim()) {
                self.entities[i].name = name.trim().to_string();
            }
        }
        Ok(())
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, i: usize) -> &Entity {
        &self.entities[i]
    }

    pub fn find_entity(&self, id: &str) -> Option<usize> {
        self.entity_index.get(id).copied()
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn find_relation(&self, name: &str) -> Option<usize> {
        self.relation_index.get(name).copied()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples whose head is the entity with this prefixed id.
    pub fn triples_for_head(&self, id: &str) -> impl Iterator<Item = &Triple> {
        self.find_entity(id)
            .and_then(|h| self.by_head.get(&h))
            .into_iter()
            .flatten()
            .map(|&k| &self.triples[k])
    }

    /// Entities that can appear as tails, in registration order.
    pub fn tail_entities(&self) -> Vec<usize> {
        (0..self.entities.len()).filter(|&i| !self.entities[i].kind.is_head()).collect()
    }

    /// Relations observed between heads of `head` type and tails of `tail` type.
    pub fn relations_between(&self, head: EntityType, tail: EntityType) -> Vec<usize> {
        let mut rels: Vec<usize> = self
            .triples
            .iter()
            .filter(|t| self.entities[t.head].kind == head && self.entities[t.tail].kind == tail)
            .map(|t| t.relation)
            .collect();
        rels.sort_unstable();
        rels.dedup();
        rels
    }

    pub fn summary(&self) -> KgSummary {
        let mut s = KgSummary { relations: self.relations.len(), ..Default::default() };
        for e in &self.entities {
            *s.entities.entry(e.kind).or_default() += 1;
        }
        for t in &self.triples {
            *s.triples.entry(self.entities[t.tail].kind).or_default() += 1;
        }
        s
    }

    /// Serializes back to TSV in insertion order.
    pub fn to_tsv(&self) -> String {
        self.triples
            .iter()
            .map(|t| {
                format!("{}\t{}\t{}\n", self.entities[t.head].id, self.relations[t.relation], self.entities[t.tail].id)
            })
            .collect()
    }
}
