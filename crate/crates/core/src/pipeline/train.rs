//! Mini-batch training of the joint objective.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datasets::{Dataset, DatasetSplit, SplitLabel};
use crate::kernel::{adam_step_filtered, AdamConfig, AdamState, ParamId, Tape};
use crate::kg::{EntityType, KnowledgeGraph};

use super::{BatchLoss, Checkpoint, KgMode, Model, Padding, PairInput, PipelineError, RunConfig};

/// One epoch's averages. `kge` is absent when the KG term is switched off.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub pla: f64,
    pub kge: Option<f64>,
    pub loss: f64,
    pub kge_triples: usize,
    pub val_rmse: f64,
}

impl EpochLog {
    pub fn to_line(&self) -> String {
        let kge = self.kge.map_or_else(|| "off".to_string(), |k| format!("{k:.12e}"));
        format!(
            "epoch={} pla={:.12e} kge={kge} loss={:.12e} triples={} val_rmse={:.12e}",
            self.epoch, self.pla, self.loss, self.kge_triples, self.val_rmse
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Lowest validation RMSE seen; earliest epoch wins ties.
    pub best: Checkpoint,
    pub log: Vec<EpochLog>,
    /// State after the final epoch.
    pub last: Model,
}

impl TrainOutcome {
    pub fn log_text(&self) -> String {
        self.log.iter().map(|l| l.to_line() + "\n").collect()
    }
}

pub fn pair_input<'a>(dataset: &'a Dataset, i: usize) -> PairInput<'a> {
    let s = dataset.sample(i);
    PairInput {
        protein_id: &s.protein_id,
        sequence: &s.sequence,
        ligand_id: &s.ligand_id,
        graph: dataset.graph(&s.ligand_id).expect("ligand parsed at load"),
    }
}

/// Predictions for `indices`, evaluated in parallel with one tape per sample.
pub fn predict_indices(model: &Model, dataset: &Dataset, indices: &[usize]) -> Result<Vec<f64>, PipelineError> {
    indices
        .par_iter()
        .map(|&i| model.predict_pair(pair_input(dataset, i), Padding::default()))
        .collect()
}

pub fn rmse(predictions: &[f64], labels: &[f64]) -> f64 {
    let sq: f64 = predictions.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum();
    (sq / labels.len() as f64).sqrt()
}

pub fn train(config: RunConfig, dataset: &Dataset, split: &DatasetSplit, kg: KnowledgeGraph) -> Result<TrainOutcome, PipelineError> {
    train_with(config, dataset, split, kg, |_, _| {})
}

/// Trains and calls `on_epoch` with the model after every epoch.
pub fn train_with(
    config: RunConfig,
    dataset: &Dataset,
    split: &DatasetSplit,
    kg: KnowledgeGraph,
    mut on_epoch: impl FnMut(&Model, &EpochLog),
) -> Result<TrainOutcome, PipelineError> {
    if split.labels.len() != dataset.len() {
        return Err(PipelineError::Incompatible(format!(
            "split covers {} samples, dataset has {}",
            split.labels.len(),
            dataset.len()
        )));
    }
    let train_idx = split.training_indices();
    let val_idx = split.indices(SplitLabel::Val);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(PipelineError::EmptyBatch(format!(
            "need training and validation samples, got {} and {}",
            train_idx.len(),
            val_idx.len()
        )));
    }
    let val_labels: Vec<f64> = val_idx.iter().map(|&i| dataset.sample(i).affinity).collect();

    let mut model = Model::new(config, kg)?;
    for s in dataset.samples() {
        model.head_inputs.insert(format!("{}:{}", EntityType::Protein.prefix(), s.protein_id), s.sequence.clone());
        model.head_inputs.insert(format!("{}:{}", EntityType::Ligand.prefix(), s.ligand_id), s.smiles.clone());
    }
    let cfg = model.config.clone();
    let frozen: BTreeSet<ParamId> = if cfg.freeze_decoder { model.decoder_params().into_iter().collect() } else { BTreeSet::new() };
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut state = AdamState::new(&model.store);

    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<Checkpoint> = None;
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        let mut order = train_idx.clone();
        order.shuffle(&mut rng);

        let (mut pla_sum, mut kge_sum, mut loss_sum, mut triples) = (0.0, 0.0, 0.0, 0usize);
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        for (b, batch) in batches.iter().enumerate() {
            let mut tape = Tape::new();
            let inputs: Vec<PairInput> = batch.iter().map(|&i| pair_input(dataset, i)).collect();
            let labels: Vec<f64> = batch.iter().map(|&i| dataset.sample(i).affinity).collect();
            let BatchLoss { pla, kge, loss, triples: n_terms } = model.batch_loss(&mut tape, &inputs, &labels, &mut rng)?;
            triples += n_terms;
            let (pla_v, kge_v, loss_v) =
                (tape.value(pla).item(), kge.map(|k| tape.value(k).item()), tape.value(loss).item());
            if !loss_v.is_finite() {
                return Err(PipelineError::Diverged { epoch, batch: b + 1, pla: pla_v, kge: kge_v.unwrap_or(0.0), loss: loss_v });
            }
            let w = batch.len() as f64;
            pla_sum += pla_v * w;
            kge_sum += kge_v.unwrap_or(0.0) * w;
            loss_sum += loss_v * w;
            let grads = tape.backward(loss)?;
            adam_step_filtered(&mut model.store, &grads, &mut state, &adam, |id| !frozen.contains(&id))?;
        }

        let preds = predict_indices(&model, dataset, &val_idx)?;
        let n = order.len() as f64;
        let entry = EpochLog {
            epoch,
            pla: pla_sum / n,
            kge: (cfg.kg != KgMode::Off).then_some(kge_sum / n),
            loss: loss_sum / n,
            kge_triples: triples,
            val_rmse: rmse(&preds, &val_labels),
        };
        if !entry.val_rmse.is_finite() {
            return Err(PipelineError::Diverged { epoch, batch: 0, pla: entry.pla, kge: entry.kge.unwrap_or(0.0), loss: entry.val_rmse });
        }
        if best.as_ref().is_none_or(|b| entry.val_rmse < b.val_rmse) {
            best = Some(Checkpoint { epoch, val_rmse: entry.val_rmse, model: model.clone() });
        }
        on_epoch(&model, &entry);
        log.push(entry);
    }
    let best = best.ok_or_else(|| PipelineError::Config { line: 0, msg: "epochs must be at least 1".into() })?;
    Ok(TrainOutcome { best, log, last: model })
}
