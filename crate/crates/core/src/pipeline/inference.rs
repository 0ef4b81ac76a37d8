//! Evaluation, prediction and explanation on a trained model.

use std::fmt::Write as _;

use serde::Serialize;

use crate::chem::parse_smiles;
use crate::datasets::{Dataset, DatasetSplit, SplitLabel};
use crate::kernel::Tape;
use crate::kg::{nearest_entities, EntityType, RankedEntity};
use crate::metrics::{evaluate, MetricsReport};

use super::train::{pair_input, predict_indices};
use super::{Checkpoint, Padding, PairInput, PipelineError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionRow {
    pub sample_id: String,
    pub partition: String,
    pub label: f64,
    pub prediction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub partitions: Vec<(String, MetricsReport)>,
    pub predictions: Vec<PredictionRow>,
}

impl EvaluationReport {
    pub fn report(&self, partition: SplitLabel) -> Option<&MetricsReport> {
        self.partitions.iter().find(|(p, _)| p == partition.as_str()).map(|(_, r)| r)
    }

    /// `[partition]` sections of `key<TAB>value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, r) in &self.partitions {
            let _ = writeln!(out, "[{p}]");
            out.push_str(&r.to_text());
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .partitions
            .iter()
            .map(|(p, r)| (p.clone(), serde_json::to_value(r).expect("report serializes")))
            .collect();
        serde_json::to_string_pretty(&map).expect("map serializes")
    }

    /// `sample_id<TAB>partition<TAB>label<TAB>prediction`, full precision.
    pub fn predictions_tsv(&self) -> String {
        let mut out = String::from("sample_id\tpartition\tlabel\tprediction\n");
        for r in &self.predictions {
            let _ = writeln!(out, "{}\t{}\t{:?}\t{:?}", r.sample_id, r.partition, r.label, r.prediction);
        }
        out
    }
}

/// Metrics for every partition the split uses, in label order.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, dataset: &Dataset, split: &DatasetSplit) -> Result<EvaluationReport, PipelineError> {
    if split.labels.len() != dataset.len() {
        return Err(PipelineError::Incompatible(format!(
            "split covers {} samples, dataset has {}",
            split.labels.len(),
            dataset.len()
        )));
    }
    let mut report = EvaluationReport { partitions: Vec::new(), predictions: Vec::new() };
    for label in split.partitions() {
        let idx = split.indices(label);
        let preds = predict_indices(&ckpt.model, dataset, &idx)?;
        let labels: Vec<f64> = idx.iter().map(|&i| dataset.sample(i).affinity).collect();
        let metrics = evaluate(&preds, &labels).map_err(|e| PipelineError::Metrics { partition: label.to_string(), source: e })?;
        report.partitions.push((label.to_string(), metrics));
        for ((&i, p), y) in idx.iter().zip(preds).zip(labels) {
            report.predictions.push(PredictionRow {
                sample_id: dataset.sample(i).id.clone(),
                partition: label.to_string(),
                label: y,
                prediction: p,
            });
        }
    }
    Ok(report)
}

/// A prediction with whichever attention vectors the fusion mode produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub affinity: f64,
    pub protein_attention: Option<Vec<f64>>,
    pub ligand_attention: Option<Vec<f64>>,
}

pub fn predict_pair_explained(ckpt: &Checkpoint, pair: PairInput<'_>, padding: Padding) -> Result<Prediction, PipelineError> {
    let model = &ckpt.model;
    let mut tape = Tape::new();
    let fwd = model.forward_pair(&mut tape, pair, padding)?;
    let y = model.predict_batch(&mut tape, std::slice::from_ref(&fwd))?;
    let column = |v: Option<crate::kernel::Var>| v.map(|v| tape.value(v).data().to_vec());
    Ok(Prediction {
        affinity: tape.value(y).item(),
        protein_attention: column(fwd.fused.protein_attention),
        ligand_attention: column(fwd.fused.ligand_attention),
    })
}

/// `ŷ` and attention for raw inputs. `protein_id` is only consulted by
/// file-backed providers.
pub fn predict(ckpt: &Checkpoint, protein_id: Option<&str>, sequence: &str, smiles: &str) -> Result<Prediction, PipelineError> {
    let graph = parse_smiles(smiles).map_err(|e| PipelineError::Input(format!("SMILES {smiles:?}: {e}")))?;
    let pair = PairInput { protein_id: protein_id.unwrap_or("query"), sequence, ligand_id: "query", graph: &graph };
    predict_pair_explained(ckpt, pair, Padding::default())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomWeight {
    pub index: usize,
    pub element: &'static str,
    pub weight: f64,
}

/// Attention export for one dataset sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Explanation {
    pub sample_id: String,
    pub prediction: f64,
    pub label: f64,
    /// `(first residue, last residue, weight)` per valid fragment.
    pub fragments: Vec<(usize, usize, f64)>,
    pub atoms: Vec<AtomWeight>,
    /// The top 20% of atoms by weight (at least one), heaviest first.
    pub top_atoms: Vec<usize>,
}

impl Explanation {
    pub fn to_text(&self) -> String {
        let mut out = format!("# sample={}\n# prediction={:.6}\n# label={:.6}\n", self.sample_id, self.prediction, self.label);
        let top: Vec<String> = self.top_atoms.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "# top_atoms={}", top.join(","));
        out.push_str("kind\tindex\tdetail\tweight\n");
        for (k, (a, b, w)) in self.fragments.iter().enumerate() {
            let _ = writeln!(out, "fragment\t{k}\t{a}-{b}\t{w:.6e}");
        }
        for a in &self.atoms {
            let _ = writeln!(out, "atom\t{}\t{}\t{:.6e}", a.index, a.element, a.weight);
        }
        out
    }
}

pub fn explain(ckpt: &Checkpoint, dataset: &Dataset, sample_id: &str) -> Result<Explanation, PipelineError> {
    let i = dataset.index_of(sample_id).ok_or_else(|| PipelineError::Lookup(format!("unknown sample {sample_id}")))?;
    let pair = pair_input(dataset, i);
    let p = predict_pair_explained(ckpt, pair, Padding::default())?;
    let cfg = &ckpt.model.config;
    let residues = pair.sequence.len().min(cfg.k_max);
    let fragments = p
        .protein_attention
        .iter()
        .flatten()
        .enumerate()
        .filter(|(k, _)| k * cfg.window < residues)
        .map(|(k, &w)| (k * cfg.window, ((k + 1) * cfg.window).min(residues) - 1, w))
        .collect();
    let atoms: Vec<AtomWeight> = p
        .ligand_attention
        .iter()
        .flatten()
        .enumerate()
        .map(|(k, &w)| AtomWeight { index: k, element: pair.graph.atom(k).element.symbol(), weight: w })
        .collect();
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[b].weight.total_cmp(&atoms[a].weight).then(a.cmp(&b)));
    order.truncate((atoms.len() as f64 * 0.2).ceil() as usize);
    Ok(Explanation {
        sample_id: sample_id.to_string(),
        prediction: p.affinity,
        label: dataset.sample(i).affinity,
        fragments,
        atoms,
        top_atoms: order,
    })
}

/// Tails of `tail_type` nearest to the head entity, ascending by score.
pub fn explain_kg(ckpt: &Checkpoint, entity_id: &str, tail_type: EntityType, k: usize) -> Result<Vec<RankedEntity>, PipelineError> {
    let model = &ckpt.model;
    let emb = model
        .kg_embeddings
        .as_ref()
        .ok_or_else(|| PipelineError::Lookup("checkpoint has no KG embeddings".into()))?;
    let head = model.head_vector(entity_id)?;
    Ok(nearest_entities(&model.kg, emb, &model.store, entity_id, &head, tail_type, k)?)
}
