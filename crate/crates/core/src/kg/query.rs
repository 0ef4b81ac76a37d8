//! Nearest-entity queries over trained KG tables.

use std::fmt::Write as _;

use crate::kernel::ParamStore;

use super::{EntityType, KgEmbeddings, KgError, KnowledgeGraph, ScoreFn};

#[derive(Clone, Debug, PartialEq)]
pub struct RankedEntity {
    pub relation: String,
    pub entity_id: String,
    pub entity_name: String,
    pub score: f64,
}

/// Scores every tail of type `tail_type` under every relation observed
/// between the head's type and that tail type, keeps each tail's minimum,
/// and returns the `k` lowest in ascending order (ties by entity id).
pub fn nearest_entities(
    kg: &KnowledgeGraph,
    emb: &KgEmbeddings,
    store: &ParamStore,
    head_id: &str,
    head: &[f64],
    tail_type: EntityType,
    k: usize,
) -> Result<Vec<RankedEntity>, KgError> {
    if k == 0 {
        return Err(KgError::Contract("k must be at least 1".into()));
    }
    let head_kind = EntityType::of_id(head_id)
        .filter(|t| t.is_head())
        .ok_or_else(|| KgError::Lookup(format!("{head_id} is not a protein or ligand id")))?;
    if !head_kind.accepts_tail(tail_type) {
        return Err(KgError::TypeRule { line: 0, msg: format!("{head_kind} heads have no {tail_type} tails") });
    }
    let score = ScoreFn::for_head(head_kind)?;
    let relations: Vec<(String, Vec<f64>)> = kg
        .relations_between(head_kind, tail_type)
        .into_iter()
        .filter_map(|r| {
            let name = &kg.relations()[r];
            emb.relation_column(name).map(|c| (name.clone(), emb.relation_vector(store, c)))
        })
        .collect();
    if relations.is_empty() {
        return Err(KgError::Lookup(format!("no relation links {head_kind} heads to {tail_type} tails")));
    }
    let mut ranked = Vec::new();
    for e in kg.entities().iter().filter(|e| e.kind == tail_type) {
        let Some(col) = emb.tail_column(&e.id) else { continue };
        let t = emb.tail_vector(store, col);
        let mut best: Option<(f64, &str)> = None;
        for (name, r) in &relations {
            let s = score.eval(head, r, &t)?;
            if best.is_none_or(|(b, _)| s < b) {
                best = Some((s, name));
            }
        }
        let (s, rel) = best.expect("at least one relation");
        ranked.push(RankedEntity { relation: rel.to_string(), entity_id: e.id.clone(), entity_name: e.name.clone(), score: s });
    }
    ranked.sort_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.entity_id.cmp(&b.entity_id)));
    ranked.truncate(k);
    Ok(ranked)
}

/// `rank<TAB>relation<TAB>entity_id<TAB>entity_name<TAB>score` lines, ranks from 1.
pub fn format_ranking(ranked: &[RankedEntity]) -> String {
    let mut out = String::new();
    for (i, r) in ranked.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{:.6e}", i + 1, r.relation, r.entity_id, r.entity_name, r.score);
    }
    out
}
