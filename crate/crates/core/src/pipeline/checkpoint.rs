//! Versioned binary checkpoints.
//!
//! Layout (little-endian): magic `KEPLACKPT`, version `u32`, config text,
//! epoch `u64`, validation RMSE `f64`, parameter count `u32` followed by
//! `(name, rows u32, cols u32, f64 data)` per tensor in registration order,
//! the KG as entity `(id, name)` list, relation list and `(head, relation,
//! tail)` index triples, the KG table column orders, and the head inputs.
//! Strings are `u32` length-prefixed UTF-8. Everything is written from
//! ordered collections, so equal models give equal bytes.

use std::collections::BTreeMap;
use std::path::Path;

use crate::kernel::Tensor;
use crate::kg::KnowledgeGraph;

use super::{Model, PipelineError, RunConfig};

pub const CHECKPOINT_MAGIC: &[u8; 9] = b"KEPLACKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    pub val_rmse: f64,
    pub model: Model,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("length fits in u32"));
    }

    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> PipelineError {
    PipelineError::Checkpoint(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PipelineError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, PipelineError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, PipelineError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, PipelineError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize, PipelineError> {
        Ok(self.u32()? as usize)
    }

    fn str(&mut self) -> Result<String, PipelineError> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("invalid UTF-8 string"))
    }

    fn strings(&mut self) -> Result<Vec<String>, PipelineError> {
        let n = self.len()?;
        (0..n).map(|_| self.str()).collect()
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.str(&m.config.to_text());
        w.u64(self.epoch as u64);
        w.f64(self.val_rmse);

        w.len(m.store.len());
        for (_, name, t) in m.store.iter() {
            w.str(name);
            w.len(t.rows());
            w.len(t.cols());
            for &v in t.data() {
                w.f64(v);
            }
        }

        w.len(m.kg.entities().len());
        for e in m.kg.entities() {
            w.str(&e.id);
            w.str(&e.name);
        }
        w.len(m.kg.relations().len());
        for r in m.kg.relations() {
            w.str(r);
        }
        w.len(m.kg.triples().len());
        for t in m.kg.triples() {
            w.len(t.head);
            w.len(t.relation);
            w.len(t.tail);
        }

        let (tails, relations) = m
            .kg_embeddings
            .as_ref()
            .map_or((&[][..], &[][..]), |e| (e.tail_ids(), e.relation_names()));
        w.len(tails.len());
        for t in tails {
            w.str(t);
        }
        w.len(relations.len());
        for r in relations {
            w.str(r);
        }

        w.len(m.head_inputs.len());
        for (k, v) in &m.head_inputs {
            w.str(k);
            w.str(v);
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PipelineError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(CHECKPOINT_MAGIC.len()).ok() != Some(&CHECKPOINT_MAGIC[..]) {
            return Err(corrupt("bad magic; not a checkpoint"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(corrupt(format!("unsupported checkpoint version {version}")));
        }
        let config = RunConfig::parse(&r.str()?)?;
        let epoch = r.u64()? as usize;
        let val_rmse = r.f64()?;

        let n_params = r.len()?;
        let mut params = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            let name = r.str()?;
            let (rows, cols) = (r.len()?, r.len()?);
            let count = rows.checked_mul(cols).ok_or_else(|| corrupt("tensor size overflow"))?;
            let data = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            params.push((name, Tensor::new(rows, cols, data)?));
        }

        let n_entities = r.len()?;
        let mut kg = KnowledgeGraph::new();
        let mut ids = Vec::with_capacity(n_entities);
        let mut names = String::new();
        for _ in 0..n_entities {
            let (id, name) = (r.str()?, r.str()?);
            kg.add_entity(&id)?;
            names.push_str(&format!("{id}\t{name}\n"));
            ids.push(id);
        }
        let relations = r.strings()?;
        for rel in &relations {
            kg.add_relation(rel);
        }
        let n_triples = r.len()?;
        for _ in 0..n_triples {
            let (h, rel, t) = (r.len()?, r.len()?, r.len()?);
            let get = |v: &Vec<String>, i: usize| v.get(i).cloned().ok_or_else(|| corrupt(format!("index {i} out of range")));
            kg.add_triple(&get(&ids, h)?, &get(&relations, rel)?, &get(&ids, t)?)?;
        }
        kg.load_names(&names)?;
        let tail_order = r.strings()?;
        let relation_order = r.strings()?;

        let n_heads = r.len()?;
        let mut head_inputs = BTreeMap::new();
        for _ in 0..n_heads {
            let (k, v) = (r.str()?, r.str()?);
            head_inputs.insert(k, v);
        }
        if r.pos != bytes.len() {
            return Err(corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
        }

        let mut model = Model::new(config, kg)?;
        let (tails, rels) = model
            .kg_embeddings
            .as_ref()
            .map_or((Vec::new(), Vec::new()), |e| (e.tail_ids().to_vec(), e.relation_names().to_vec()));
        if tails != tail_order || rels != relation_order {
            return Err(corrupt("KG column order does not match the stored graph"));
        }
        if params.len() != model.store.len() {
            return Err(PipelineError::Incompatible(format!(
                "checkpoint has {} tensors, configuration builds {}",
                params.len(),
                model.store.len()
            )));
        }
        for (name, t) in params {
            let id = model
                .store
                .find(&name)
                .ok_or_else(|| PipelineError::Incompatible(format!("configuration has no parameter {name}")))?;
            let slot = model.store.get_mut(id);
            if slot.shape() != t.shape() {
                return Err(PipelineError::Incompatible(format!(
                    "{name}: stored shape {:?}, configuration expects {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t;
        }
        model.head_inputs = head_inputs;
        Ok(Checkpoint { epoch, val_rmse, model })
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
