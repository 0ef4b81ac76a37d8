//! The assembled model: encoders, global projections, fusion, decoder and
//! KG tables over one parameter store.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chem::MolecularGraph;
use crate::encoders::{
    encode_ligand, encode_protein, global_project, global_projection, EmbeddingStore, LigandEncoder,
    LocalRepresentation, ProteinEmbeddingProvider, ProteinEncoder, ProteinInput,
};
use crate::fusion::{fuse, pla_loss, predict_affinity, total_loss, Decoder, Fused};
use crate::kernel::{Axis, ParamId, ParamStore, Tape, Tensor, Var};
use crate::kg::{kge_loss, kge_margin_loss, EntityType, KgEmbeddings, KgeTerm, KnowledgeGraph, ScoreFn};
use crate::nn::Linear;

use super::{KgMode, KgeObjective, PipelineError, ProviderMode, RunConfig};

/// Raw inputs of one protein-ligand pair.
#[derive(Clone, Copy, Debug)]
pub struct PairInput<'a> {
    pub protein_id: &'a str,
    pub sequence: &'a str,
    pub ligand_id: &'a str,
    pub graph: &'a MolecularGraph,
}

/// Optional zero padding applied before encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Padding {
    pub residues: Option<usize>,
    pub atoms: Option<usize>,
}

/// Forward pass of one pair on a tape.
#[derive(Clone, Debug)]
pub struct PairForward {
    pub protein: LocalRepresentation,
    pub ligand: LocalRepresentation,
    pub fused: Fused,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: RunConfig,
    pub store: ParamStore,
    pub provider: ProteinEmbeddingProvider,
    pub protein: ProteinEncoder,
    pub ligand: LigandEncoder,
    pub protein_global: Linear,
    pub ligand_global: Linear,
    pub decoder: Decoder,
    pub kg: KnowledgeGraph,
    /// `None` when the graph has no tails.
    pub kg_embeddings: Option<KgEmbeddings>,
    /// Sequence or SMILES of every head the model has seen, by prefixed id.
    pub head_inputs: BTreeMap<String, String>,
}

/// Loss nodes of one mini-batch.
#[derive(Clone, Copy, Debug)]
pub struct BatchLoss {
    pub pla: Var,
    /// Absent when the KG term is switched off.
    pub kge: Option<Var>,
    pub loss: Var,
    pub triples: usize,
}

/// KGE terms gathered for a batch and the heads they came from.
#[derive(Clone, Debug, Default)]
pub struct BatchKg {
    pub terms: Vec<KgeTerm>,
    pub heads: Vec<String>,
}

impl Model {
    /// Initializes every parameter from `ChaCha8Rng` seeded with
    /// `config.seed`, in a fixed registration order. KG tables are created
    /// whenever `kg` has tails, whatever `config.kg` says.
    pub fn new(config: RunConfig, kg: KnowledgeGraph) -> Result<Self, PipelineError> {
        config.validate().map_err(|msg| PipelineError::Config { line: 0, msg })?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let provider = match &config.provider {
            ProviderMode::Trainable => ProteinEmbeddingProvider::trainable(&mut store, config.provider_dim, &mut rng),
            ProviderMode::File(path) => ProteinEmbeddingProvider::FileBacked(EmbeddingStore::load(path)?),
        };
        let dp = provider.dim(&store);
        let protein = ProteinEncoder::new(&mut store, &config.protein_widths(dp), &mut rng)?;
        let ligand = LigandEncoder::new(&mut store, &config.ligand_widths(), &mut rng)?;
        let protein_global = global_projection(&mut store, "protein.global", config.dim, &mut rng);
        let ligand_global = global_projection(&mut store, "ligand.global", config.dim, &mut rng);
        let decoder = Decoder::new(&mut store, 2 * config.dim, config.decoder_hidden, &mut rng);
        let kg_embeddings =
            (!kg.tail_entities().is_empty()).then(|| KgEmbeddings::new(&mut store, &kg, config.dim, &mut rng));
        Ok(Self {
            config,
            store,
            provider,
            protein,
            ligand,
            protein_global,
            ligand_global,
            decoder,
            kg,
            kg_embeddings,
            head_inputs: BTreeMap::new(),
        })
    }

    pub fn decoder_params(&self) -> Vec<ParamId> {
        self.decoder.params()
    }

    pub fn all_params(&self) -> Vec<ParamId> {
        self.store.ids().collect()
    }

    fn protein_input(&self, padding: Padding) -> ProteinInput {
        ProteinInput { k_max: self.config.k_max, window: self.config.window, pad_to: padding.residues }
    }

    pub fn encode_protein(
        &self,
        tape: &mut Tape,
        protein_id: &str,
        sequence: &str,
        padding: Padding,
    ) -> Result<LocalRepresentation, PipelineError> {
        Ok(encode_protein(tape, &self.store, &self.provider, &self.protein, protein_id, sequence, self.protein_input(padding))?)
    }

    pub fn encode_ligand(&self, tape: &mut Tape, graph: &MolecularGraph, padding: Padding) -> Result<LocalRepresentation, PipelineError> {
        Ok(encode_ligand(tape, &self.store, &self.ligand, graph, self.config.n_max, padding.atoms)?)
    }

    pub fn forward_pair(&self, tape: &mut Tape, pair: PairInput<'_>, padding: Padding) -> Result<PairForward, PipelineError> {
        let protein = self.encode_protein(tape, pair.protein_id, pair.sequence, padding)?;
        let ligand = self.encode_ligand(tape, pair.graph, padding)?;
        let fused = fuse(tape, self.config.fusion, &protein, &ligand)?;
        Ok(PairForward { protein, ligand, fused })
    }

    /// `1 x k` predictions for the stacked joint vectors of `pairs`.
    pub fn predict_batch(&self, tape: &mut Tape, pairs: &[PairForward]) -> Result<Var, PipelineError> {
        let joints: Vec<Var> = pairs.iter().map(|p| p.fused.joint).collect();
        let f = tape.concat_all(&joints, Axis::Cols)?;
        Ok(predict_affinity(tape, &self.store, &self.decoder, f)?)
    }

    /// `ŷ` for one pair on a fresh tape.
    pub fn predict_pair(&self, pair: PairInput<'_>, padding: Padding) -> Result<f64, PipelineError> {
        let mut tape = Tape::new();
        let fwd = self.forward_pair(&mut tape, pair, padding)?;
        let y = self.predict_batch(&mut tape, &[fwd])?;
        Ok(tape.value(y).item())
    }

    /// Global head embedding of a local representation.
    pub fn head_embedding(&self, tape: &mut Tape, kind: EntityType, rep: &LocalRepresentation) -> Result<Var, PipelineError> {
        let proj = match kind {
            EntityType::Protein => &self.protein_global,
            EntityType::Ligand => &self.ligand_global,
            other => return Err(PipelineError::Lookup(format!("{other} entities are not heads"))),
        };
        Ok(global_project(tape, &self.store, proj, rep)?)
    }

    /// Triples of the batch's heads allowed by the KG mode, each head once,
    /// in batch order.
    pub fn gather_kg_terms(&self, tape: &mut Tape, batch: &[(PairInput<'_>, &PairForward)]) -> Result<BatchKg, PipelineError> {
        let mut out = BatchKg::default();
        let Some(emb) = &self.kg_embeddings else { return Ok(out) };
        let mode = self.config.kg;
        let mut seen = BTreeSet::new();
        for (pair, fwd) in batch {
            let heads = [
                (mode.uses_protein(), EntityType::Protein, pair.protein_id, &fwd.protein),
                (mode.uses_ligand(), EntityType::Ligand, pair.ligand_id, &fwd.ligand),
            ];
            for (used, kind, id, rep) in heads {
                let head_id = format!("{}:{id}", kind.prefix());
                if !used || !seen.insert(head_id.clone()) {
                    continue;
                }
                let triples: Vec<_> = self.kg.triples_for_head(&head_id).copied().collect();
                if triples.is_empty() {
                    continue;
                }
                let head = self.head_embedding(tape, kind, rep)?;
                let score = ScoreFn::for_head(kind)?;
                for t in triples {
                    let relation = emb
                        .relation_column(&self.kg.relations()[t.relation])
                        .ok_or_else(|| PipelineError::Lookup(format!("relation {} has no embedding", self.kg.relations()[t.relation])))?;
                    let tail_id = &self.kg.entity(t.tail).id;
                    let tail = emb
                        .tail_column(tail_id)
                        .ok_or_else(|| PipelineError::Lookup(format!("tail {tail_id} has no embedding")))?;
                    out.terms.push(KgeTerm { head, score, relation, tail });
                }
                out.heads.push(head_id);
            }
        }
        Ok(out)
    }

    /// The configured KGE objective over `terms`. Margin negatives are
    /// tails of the true tail's type drawn uniformly from `rng`.
    pub fn kge_objective<R: Rng + ?Sized>(&self, tape: &mut Tape, terms: &[KgeTerm], rng: &mut R) -> Result<Var, PipelineError> {
        let Some(emb) = &self.kg_embeddings else {
            return Ok(tape.constant(Tensor::scalar(0.0)));
        };
        match self.config.kge_loss {
            KgeObjective::Score => Ok(kge_loss(tape, &self.store, emb, terms)?),
            KgeObjective::Margin => {
                let mut by_kind: BTreeMap<EntityType, Vec<usize>> = BTreeMap::new();
                for (col, id) in emb.tail_ids().iter().enumerate() {
                    if let Some(kind) = EntityType::of_id(id) {
                        by_kind.entry(kind).or_default().push(col);
                    }
                }
                let negatives: Vec<usize> = terms
                    .iter()
                    .map(|t| {
                        let kind = EntityType::of_id(&emb.tail_ids()[t.tail]).expect("typed tail");
                        let pool = &by_kind[&kind];
                        pool[rng.gen_range(0..pool.len())]
                    })
                    .collect();
                Ok(kge_margin_loss(tape, &self.store, emb, terms, &negatives, self.config.kge_margin)?)
            }
        }
    }

    /// `L_PLA + β L_KGE + λ Σ‖p‖²` for one mini-batch.
    pub fn batch_loss<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        inputs: &[PairInput<'_>],
        labels: &[f64],
        rng: &mut R,
    ) -> Result<BatchLoss, PipelineError> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(PipelineError::EmptyBatch(format!("{} inputs, {} labels", inputs.len(), labels.len())));
        }
        let fwds = inputs
            .iter()
            .map(|&p| self.forward_pair(tape, p, Padding::default()))
            .collect::<Result<Vec<_>, _>>()?;
        let yhat = self.predict_batch(tape, &fwds)?;
        let y = tape.constant(Tensor::row(labels.to_vec()));
        let pla = pla_loss(tape, yhat, y)?;
        let (kge, triples) = if self.config.kg == KgMode::Off {
            (None, 0)
        } else {
            let pairs: Vec<_> = inputs.iter().copied().zip(fwds.iter()).collect();
            let gathered = self.gather_kg_terms(tape, &pairs)?;
            (Some(self.kge_objective(tape, &gathered.terms, rng)?), gathered.terms.len())
        };
        let params = self.all_params();
        let loss = total_loss(tape, &self.store, pla, kge, self.config.beta, self.config.lambda, &params)?;
        Ok(BatchLoss { pla, kge, loss, triples })
    }

    /// Embedding of a head entity recomputed from its stored input.
    pub fn head_vector(&self, head_id: &str) -> Result<Vec<f64>, PipelineError> {
        let kind = EntityType::of_id(head_id)
            .filter(|k| k.is_head())
            .ok_or_else(|| PipelineError::Lookup(format!("{head_id} is not a protein or ligand id")))?;
        let input = self
            .head_inputs
            .get(head_id)
            .ok_or_else(|| PipelineError::Lookup(format!("unknown entity {head_id}")))?;
        let mut tape = Tape::new();
        let rep = match kind {
            EntityType::Protein => {
                let raw = head_id.split_once(':').map_or(head_id, |(_, r)| r);
                self.encode_protein(&mut tape, raw, input, Padding::default())?
            }
            _ => {
                let graph = crate::chem::parse_smiles(input).map_err(|e| PipelineError::Lookup(format!("{head_id}: {e}")))?;
                self.encode_ligand(&mut tape, &graph, Padding::default())?
            }
        };
        let h = self.head_embedding(&mut tape, kind, &rep)?;
        Ok(tape.value(h).data().to_vec())
    }
}
