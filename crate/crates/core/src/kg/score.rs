//! Triple score functions, learnable KG tables and the KGE objective.

use std::collections::BTreeMap;

use rand::Rng;

use crate::kernel::{ParamId, ParamStore, Tape, Tensor, Var};

use super::{EntityType, KgError, KnowledgeGraph};

fn check_widths(h: &[f64], r: &[f64], t: &[f64]) -> Result<(), KgError> {
    if h.len() != r.len() || h.len() != t.len() {
        return Err(KgError::Width(format!("h {}, r {}, t {}", h.len(), r.len(), t.len())));
    }
    Ok(())
}

/// `‖h ∘ r − t‖` on real vectors.
pub fn score_rotate(h: &[f64], r: &[f64], t: &[f64]) -> Result<f64, KgError> {
    check_widths(h, r, t)?;
    Ok(h.iter().zip(r).zip(t).map(|((h, r), t)| (h * r - t).powi(2)).sum::<f64>().sqrt())
}

/// `‖h + r − t‖`.
pub fn score_transe(h: &[f64], r: &[f64], t: &[f64]) -> Result<f64, KgError> {
    check_widths(h, r, t)?;
    Ok(h.iter().zip(r).zip(t).map(|((h, r), t)| (h + r - t).powi(2)).sum::<f64>().sqrt())
}

/// Score routing: protein heads use the Hadamard form, ligand heads the
/// translation form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreFn {
    RotatE,
    TransE,
}

impl ScoreFn {
    pub fn for_head(kind: EntityType) -> Result<Self, KgError> {
        match kind {
            EntityType::Protein => Ok(ScoreFn::RotatE),
            EntityType::Ligand => Ok(ScoreFn::TransE),
            other => Err(KgError::TypeRule { line: 0, msg: format!("{other} entities cannot be heads") }),
        }
    }

    pub fn eval(self, h: &[f64], r: &[f64], t: &[f64]) -> Result<f64, KgError> {
        match self {
            ScoreFn::RotatE => score_rotate(h, r, t),
            ScoreFn::TransE => score_transe(h, r, t),
        }
    }

    /// Tape version over `D x 1` vectors, giving a `1 x 1` score.
    pub fn var(self, tape: &mut Tape, h: Var, r: Var, t: Var) -> Result<Var, KgError> {
        let x = match self {
            ScoreFn::RotatE => tape.hadamard(h, r)?,
            ScoreFn::TransE => tape.add(h, r)?,
        };
        let d = tape.sub(x, t)?;
        Ok(tape.l2_norm(d))
    }
}

/// Tail table `T` (`D x tails`) and relation table `R` (`D x relations`).
#[derive(Clone, Debug, PartialEq)]
pub struct KgEmbeddings {
    pub tails: ParamId,
    pub relations: ParamId,
    tail_ids: Vec<String>,
    tail_lookup: BTreeMap<String, usize>,
    relation_names: Vec<String>,
    relation_lookup: BTreeMap<String, usize>,
}

impl KgEmbeddings {
    /// One column per tail entity and per relation of `kg`, uniform in
    /// `±0.5/√D`.
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, kg: &KnowledgeGraph, dim: usize, rng: &mut R) -> Self {
        let tail_ids: Vec<String> = kg.tail_entities().into_iter().map(|i| kg.entity(i).id.clone()).collect();
        let relation_names = kg.relations().to_vec();
        let bound = 0.5 / (dim as f64).sqrt();
        let tails = store.add("kg.tails", Tensor::uniform(dim, tail_ids.len(), bound, rng));
        let relations = store.add("kg.relations", Tensor::uniform(dim, relation_names.len(), bound, rng));
        Self::from_parts(tails, relations, tail_ids, relation_names)
    }

    /// Rebuilds the lookup from stored column orders.
    pub fn from_parts(tails: ParamId, relations: ParamId, tail_ids: Vec<String>, relation_names: Vec<String>) -> Self {
        let tail_lookup = tail_ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let relation_lookup = relation_names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { tails, relations, tail_ids, tail_lookup, relation_names, relation_lookup }
    }

    pub fn tail_ids(&self) -> &[String] {
        &self.tail_ids
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn tail_column(&self, id: &str) -> Option<usize> {
        self.tail_lookup.get(id).copied()
    }

    pub fn relation_column(&self, name: &str) -> Option<usize> {
        self.relation_lookup.get(name).copied()
    }

    pub fn tail_vector(&self, store: &ParamStore, col: usize) -> Vec<f64> {
        store.get(self.tails).column_values(col)
    }

    pub fn relation_vector(&self, store: &ParamStore, col: usize) -> Vec<f64> {
        store.get(self.relations).column_values(col)
    }
}

/// One triple of a batch, with its head embedding already on the tape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KgeTerm {
    pub head: Var,
    pub score: ScoreFn,
    pub relation: usize,
    pub tail: usize,
}

fn term_score(tape: &mut Tape, store: &ParamStore, emb: &KgEmbeddings, term: &KgeTerm, tail: usize) -> Result<Var, KgError> {
    let rt = tape.param(store, emb.relations);
    let tt = tape.param(store, emb.tails);
    let r = tape.select_columns(rt, &[term.relation])?;
    let t = tape.select_columns(tt, &[tail])?;
    term.score.var(tape, term.head, r, t)
}

/// Mean routed score over the batch triples; a zero constant when empty.
pub fn kge_loss(tape: &mut Tape, store: &ParamStore, emb: &KgEmbeddings, terms: &[KgeTerm]) -> Result<Var, KgError> {
    if terms.is_empty() {
        return Ok(tape.constant(Tensor::scalar(0.0)));
    }
    let mut total: Option<Var> = None;
    for term in terms {
        let s = term_score(tape, store, emb, term, term.tail)?;
        total = Some(match total {
            Some(acc) => tape.add(acc, s)?,
            None => s,
        });
    }
    Ok(tape.scale(total.expect("non-empty"), 1.0 / terms.len() as f64))
}

/// Mean of `max(0, margin + F(h, r, t) − F(h, r, t'))` with one corrupted
/// tail column `t'` per term.
pub fn kge_margin_loss(
    tape: &mut Tape,
    store: &ParamStore,
    emb: &KgEmbeddings,
    terms: &[KgeTerm],
    negatives: &[usize],
    margin: f64,
) -> Result<Var, KgError> {
    if terms.len() != negatives.len() {
        return Err(KgError::Contract(format!("{} terms but {} negatives", terms.len(), negatives.len())));
    }
    if terms.is_empty() {
        return Ok(tape.constant(Tensor::scalar(0.0)));
    }
    let m = tape.constant(Tensor::scalar(margin));
    let mut total: Option<Var> = None;
    for (term, &neg) in terms.iter().zip(negatives) {
        let pos = term_score(tape, store, emb, term, term.tail)?;
        let negs = term_score(tape, store, emb, term, neg)?;
        let d = tape.sub(pos, negs)?;
        let d = tape.add(d, m)?;
        let h = tape.relu(d);
        total = Some(match total {
            Some(acc) => tape.add(acc, h)?,
            None => h,
        });
    }
    Ok(tape.scale(total.expect("non-empty"), 1.0 / terms.len() as f64))
}
