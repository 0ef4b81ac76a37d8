//! Acceptance checks. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero when a criterion fails on evidence that is present.
//! Criteria whose inputs are not shipped with the repository print
//! `[FAIL]` marked `unverified` and do not change the exit status.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::distributions::uniform::SampleRange;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kepla::chem::{parse_smiles, random_molecule, MolecularGraph};
use kepla::datasets::{
    clustering_pair_split, cold_pair_split, ligand_clusters, protein_clusters, random_split, single_linkage_clusters,
    ClusterSplitParams, ComplexSample, Dataset, DatasetError, DatasetSplit, SplitLabel,
};
use kepla::encoders::LocalRepresentation;
use kepla::fusion::{cross_attention, fuse, interaction_map, FusionMode};
use kepla::kernel::{gradcheck, ParamStore, Tape, Tensor};
use kepla::kg::{nearest_entities, score_rotate, score_transe, EntityType, KgEmbeddings, KnowledgeGraph};
use kepla::metrics::evaluate;
use kepla::pipeline::{
    pair_input, predict_indices, train, train_with, Model, PairInput, Padding, RunConfig,
};

struct Outcome {
    pass: bool,
    unverified: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, unverified: false, detail: detail.into() }
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn config(text: &str) -> RunConfig {
    RunConfig::parse(text).expect("valid acceptance config")
}

const AMINO: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";

fn random_sequence<R: Rng>(rng: &mut R, len: impl SampleRange<usize>) -> String {
    let len = rng.gen_range(len);
    (0..len).map(|_| AMINO[rng.gen_range(0..AMINO.len())] as char).collect()
}

const FRAGMENTS: [&str; 12] =
    ["C", "CC", "N", "O", "C(=O)", "C(N)", "c1ccccc1", "C1CCCC1", "C(C)C", "S", "C(O)", "c1ccncc1"];

/// Chain of random fragments starting at a carbon.
fn random_smiles<R: Rng>(rng: &mut R, fragments: impl SampleRange<usize>) -> String {
    let fragments = rng.gen_range(fragments);
    let mut s = String::from("C");
    for _ in 0..fragments {
        s.push_str(FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())]);
    }
    s
}

fn sample(id: String, pid: &str, seq: &str, lid: &str, smiles: &str, y: f64) -> ComplexSample {
    ComplexSample {
        id,
        protein_id: pid.into(),
        sequence: seq.into(),
        ligand_id: lid.into(),
        smiles: smiles.into(),
        affinity: y,
    }
}

fn trailing_mask<R: Rng>(rng: &mut R, len: usize) -> Vec<bool> {
    let valid = rng.gen_range(1..=len);
    (0..len).map(|i| i < valid).collect()
}

fn local(tape: &mut Tape, t: Tensor, mask: Vec<bool>) -> LocalRepresentation {
    LocalRepresentation { value: tape.constant(t), mask }
}

/// Probability-vector contract of a column of weights under `mask`.
fn check_weights(w: &[f64], mask: &[bool]) -> Result<(), String> {
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("sum {sum}"));
    }
    if w.iter().any(|&x| x < 0.0) {
        return Err("negative weight".into());
    }
    if w.iter().zip(mask).any(|(&x, &m)| !m && x != 0.0) {
        return Err("masked weight not zero".into());
    }
    Ok(())
}

fn uniform_error(w: &[f64], mask: &[bool]) -> f64 {
    let n = mask.iter().filter(|&&m| m).count() as f64;
    w.iter().zip(mask).filter(|(_, &m)| m).map(|(&x, _)| (x - 1.0 / n).abs()).fold(0.0, f64::max)
}

// 1 ---------------------------------------------------------------------

fn gradient_model(fusion: FusionMode) -> (Model, Vec<(String, String, String, String)>) {
    let kg = KnowledgeGraph::parse(
        "P:p1\tinvolved_in\tBP:1\nP:p1\tenables\tMF:1\nL:l1\tnum_donors\tMD:num_donors=2\nL:l1\thas_feature\tCF:donor\n",
    )
    .unwrap();
    let cfg = config(&format!(
        "dim = 4\nprovider_dim = 4\nprotein_hidden = 4\nligand_layers = 2\ndecoder_hidden = 8\n\
         beta = 0.5\nlambda = 1e-3\nseed = 11\nfusion = {}\n",
        fusion.as_str()
    ));
    let mut model = Model::new(cfg, kg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seq = random_sequence(&mut rng, 27..=27);
    let rows = vec![
        ("p1".to_string(), seq.clone(), "l1".to_string(), "CC(N)CO".to_string()),
        ("p2".to_string(), random_sequence(&mut rng, 20..=20), "l2".to_string(), "OCC(C)N".to_string()),
    ];
    model.head_inputs.insert("P:p1".into(), seq);
    (model, rows)
}

fn gradient_check(fusion: FusionMode) -> Result<(f64, usize), String> {
    let (model, rows) = gradient_model(fusion);
    let graphs: Vec<MolecularGraph> = rows.iter().map(|r| parse_smiles(&r.3).unwrap()).collect();
    if graphs[0].atom_count() != 5 {
        return Err(format!("ligand has {} atoms", graphs[0].atom_count()));
    }
    let inputs: Vec<PairInput> = rows
        .iter()
        .zip(&graphs)
        .map(|(r, g)| PairInput { protein_id: &r.0, sequence: &r.1, ligand_id: &r.2, graph: g })
        .collect();
    let labels = [6.3, 4.1];
    let report = gradcheck::check(&model.store, 1e-5, |tape, store| {
        let mut m = model.clone();
        m.store = store.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        m.batch_loss(tape, &inputs, &labels, &mut rng).map(|b| {
            assert_eq!(b.triples, 4);
            b.loss
        })
    })
    .map_err(|e| e.to_string())?;
    Ok((report.max_rel_err, report.checked))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    match gradient_check(FusionMode::Cross) {
        Ok((err, n)) => {
            let secs = start.elapsed().as_secs_f64();
            Outcome::new(err < 1e-4 && secs < 10.0, format!("max_rel_err={err:.3e} over {n} entries in {secs:.2}s"))
        }
        Err(e) => Outcome::new(false, e),
    }
}

// 2 ---------------------------------------------------------------------

fn attention_instances(mode: FusionMode, count: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_uniform = 0.0f64;
    for k in 0..count {
        let d = rng.gen_range(1..9);
        let (m, n) = (rng.gen_range(1..14), rng.gen_range(1..14));
        let (pm, lm) = (trailing_mask(&mut rng, m), trailing_mask(&mut rng, n));
        let constant = k % 4 == 3;
        let (hp_t, hd_t) = if constant {
            let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fill = |v: &[f64], cols: usize, mask: &[bool], rng: &mut ChaCha8Rng| {
                let mut t = Tensor::zeros(d, cols);
                for c in 0..cols {
                    for r in 0..d {
                        t.set(r, c, if mask[c] { v[r] } else { rng.gen_range(-5.0..5.0) });
                    }
                }
                t
            };
            (fill(&a, m, &pm, &mut rng), fill(&b, n, &lm, &mut rng))
        } else {
            (Tensor::uniform(d, m, 3.0, &mut rng), Tensor::uniform(d, n, 3.0, &mut rng))
        };
        let mut tape = Tape::new();
        let hp = local(&mut tape, hp_t, pm.clone());
        let hd = local(&mut tape, hd_t, lm.clone());
        let (ap, al) = if mode == FusionMode::Cross {
            let v = interaction_map(&mut tape, &hp, &hd).map_err(|e| e.to_string())?;
            let a = cross_attention(&mut tape, &v, d).map_err(|e| e.to_string())?;
            (Some(a.protein), Some(a.ligand))
        } else {
            let f = fuse(&mut tape, mode, &hp, &hd).map_err(|e| e.to_string())?;
            (f.protein_attention, f.ligand_attention)
        };
        for (w, mask) in [(ap, &pm), (al, &lm)] {
            let Some(w) = w else { continue };
            let w = tape.value(w).data().to_vec();
            check_weights(&w, mask).map_err(|e| format!("instance {k}: {e}"))?;
            if constant {
                worst_uniform = worst_uniform.max(uniform_error(&w, mask));
            }
        }
    }
    if worst_uniform > 1e-12 {
        return Err(format!("constant inputs deviate from uniform by {worst_uniform:.3e}"));
    }
    Ok(worst_uniform)
}

fn criterion_2() -> Outcome {
    match attention_instances(FusionMode::Cross, 1000, 21) {
        Ok(u) => Outcome::new(true, format!("1000 instances; uniform deviation {u:.1e}")),
        Err(e) => Outcome::new(false, e),
    }
}

// 3 ---------------------------------------------------------------------

fn invariance(fusion: FusionMode, molecules: usize, seed: u64) -> Result<(f64, f64), String> {
    let cfg = config(&format!(
        "dim = 16\nprovider_dim = 16\nprotein_hidden = 32\nligand_layers = 3\ndecoder_hidden = 32\nseed = {seed}\nfusion = {}\n",
        fusion.as_str()
    ));
    let model = Model::new(cfg, KnowledgeGraph::new()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut perm_worst, mut pad_worst) = (0.0f64, 0.0f64);
    for _ in 0..molecules {
        let n_atoms = rng.gen_range(2..40);
        let graph = random_molecule(&mut rng, n_atoms);
        let mut order: Vec<usize> = (0..graph.atom_count()).collect();
        order.shuffle(&mut rng);
        let relabeled = graph.relabeled(&order).map_err(|e| e.to_string())?;
        let seq = random_sequence(&mut rng, 5..200);
        let pair = |g| PairInput { protein_id: "p", sequence: &seq, ligand_id: "l", graph: g };
        let y = model.predict_pair(pair(&graph), Padding::default()).map_err(|e| e.to_string())?;
        let yr = model.predict_pair(pair(&relabeled), Padding::default()).map_err(|e| e.to_string())?;
        let padded = Padding { residues: Some(1080), atoms: Some(290) };
        let yp = model.predict_pair(pair(&graph), padded).map_err(|e| e.to_string())?;
        perm_worst = perm_worst.max((y - yr).abs());
        pad_worst = pad_worst.max((y - yp).abs());
    }
    if perm_worst >= 1e-9 || pad_worst >= 1e-12 {
        return Err(format!("relabel change {perm_worst:.3e}, padding change {pad_worst:.3e}"));
    }
    Ok((perm_worst, pad_worst))
}

fn criterion_3() -> Outcome {
    match invariance(FusionMode::Cross, 100, 31) {
        Ok((p, q)) => Outcome::new(true, format!("100 molecules; relabel change {p:.1e}, padding change {q:.1e}")),
        Err(e) => Outcome::new(false, e),
    }
}

// 4 ---------------------------------------------------------------------

fn norm_by_hypot(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::hypot)
}

fn toy_kg<R: Rng>(rng: &mut R) -> KnowledgeGraph {
    let heads = [("P:p0", EntityType::Protein), ("P:p1", EntityType::Protein), ("L:l0", EntityType::Ligand), ("L:l1", EntityType::Ligand)];
    let tails: Vec<String> = [("BP", 4), ("CC", 3), ("MF", 3), ("MD", 4), ("CF", 2)]
        .iter()
        .flat_map(|&(p, n)| (0..n).map(move |i| format!("{p}:t{i}")))
        .collect();
    let relation = |t: &str, pick: usize| match t.split(':').next().unwrap() {
        "BP" => "involved_in",
        "CC" => "located_in",
        "MF" => ["enables", "contributes_to"][pick % 2],
        "MD" => ["num_donors", "num_rings"][pick % 2],
        _ => "has_feature",
    };
    let mut kg = KnowledgeGraph::new();
    for t in &tails {
        let kind = EntityType::of_id(t).unwrap();
        let candidates: Vec<&str> = heads.iter().filter(|h| h.1.accepts_tail(kind)).map(|h| h.0).collect();
        let h = candidates[rng.gen_range(0..candidates.len())];
        kg.add_triple(h, relation(t, rng.gen()), t).unwrap();
    }
    while kg.triples().len() < 30 {
        let t = &tails[rng.gen_range(0..tails.len())];
        let kind = EntityType::of_id(t).unwrap();
        let candidates: Vec<&str> = heads.iter().filter(|h| h.1.accepts_tail(kind)).map(|h| h.0).collect();
        let h = candidates[rng.gen_range(0..candidates.len())];
        let _ = kg.add_triple(h, relation(t, rng.gen()), t);
    }
    kg
}

fn kg_scoring() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.gen_range(1..65);
        let v = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect() };
        let (h, r, t) = (v(&mut rng), v(&mut rng), v(&mut rng));
        let rot = score_rotate(&h, &r, &t).map_err(|e| e.to_string())?;
        let tra = score_transe(&h, &r, &t).map_err(|e| e.to_string())?;
        let rot_ref = norm_by_hypot((0..d).map(|i| h[i] * r[i] - t[i]));
        let tra_ref = norm_by_hypot((0..d).map(|i| h[i] + r[i] - t[i]));
        worst = worst.max((rot - rot_ref).abs()).max((tra - tra_ref).abs());
    }
    if worst > 1e-12 {
        return Err(format!("score deviates from reference norm by {worst:.3e}"));
    }

    let dim = 6;
    let mut planted_worst = 0.0f64;
    for round in 0..20 {
        let kg = toy_kg(&mut rng);
        if kg.entities().len() != 20 || kg.triples().len() != 30 {
            return Err(format!("toy KG has {} entities, {} triples", kg.entities().len(), kg.triples().len()));
        }
        let mut store = ParamStore::new();
        let emb = KgEmbeddings::new(&mut store, &kg, dim, &mut rng);
        for head in ["P:p0", "P:p1", "L:l0", "L:l1"] {
            let hk = EntityType::of_id(head).unwrap();
            let h: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for kind in [EntityType::BP, EntityType::CC, EntityType::MF, EntityType::MD, EntityType::CF] {
                if !hk.accepts_tail(kind) {
                    continue;
                }
                let rels = kg.relations_between(hk, kind);
                if rels.is_empty() {
                    continue;
                }
                let mut brute: Vec<(f64, String, String)> = kg
                    .entities()
                    .iter()
                    .filter(|e| e.kind == kind)
                    .map(|e| {
                        let t = emb.tail_vector(&store, emb.tail_column(&e.id).unwrap());
                        rels.iter()
                            .map(|&r| {
                                let name = &kg.relations()[r];
                                let rv = emb.relation_vector(&store, emb.relation_column(name).unwrap());
                                let s = if hk == EntityType::Protein {
                                    norm_by_hypot((0..dim).map(|i| h[i] * rv[i] - t[i]))
                                } else {
                                    norm_by_hypot((0..dim).map(|i| h[i] + rv[i] - t[i]))
                                };
                                (s, e.id.clone(), name.clone())
                            })
                            .min_by(|a, b| a.0.total_cmp(&b.0))
                            .unwrap()
                    })
                    .collect();
                brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let got = nearest_entities(&kg, &emb, &store, head, &h, kind, 100).map_err(|e| e.to_string())?;
                if got.len() != brute.len() {
                    return Err(format!("round {round}: {} ranked, {} expected", got.len(), brute.len()));
                }
                for (g, b) in got.iter().zip(&brute) {
                    if g.entity_id != b.1 || (g.score - b.0).abs() > 1e-12 {
                        return Err(format!("round {round}: ranking of {head} over {kind} differs"));
                    }
                }
            }
        }

        // planted exact solutions
        let mut store = store.clone();
        for (head, kind) in [("P:p0", EntityType::BP), ("L:l0", EntityType::MD)] {
            let hk = EntityType::of_id(head).unwrap();
            let rels = kg.relations_between(hk, kind);
            let Some(&r) = rels.first() else { continue };
            let rc = emb.relation_column(&kg.relations()[r]).unwrap();
            let rv = emb.relation_vector(&store, rc);
            let target = kg.entities().iter().find(|e| e.kind == kind).unwrap().id.clone();
            let tc = emb.tail_column(&target).unwrap();
            let h: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for i in 0..dim {
                let v = if hk == EntityType::Protein { h[i] * rv[i] } else { h[i] + rv[i] };
                store.get_mut(emb.tails).set(i, tc, v);
            }
            let got = nearest_entities(&kg, &emb, &store, head, &h, kind, 1).map_err(|e| e.to_string())?;
            if got[0].entity_id != target || got[0].score >= 1e-12 {
                return Err(format!("planted {target} ranked {} with score {:.3e}", got[0].entity_id, got[0].score));
            }
            planted_worst = planted_worst.max(got[0].score);
        }
    }
    Ok(format!("1000 triples within {worst:.1e}; planted score {planted_worst:.1e}; 20 toy KGs ranked exhaustively"))
}

fn criterion_4() -> Outcome {
    match kg_scoring() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

// 5 ---------------------------------------------------------------------

const OVERFIT_CONFIG: &str = "dim = 16\nprovider_dim = 16\nprotein_hidden = 32\nligand_layers = 2\ndecoder_hidden = 64\n\
                              kg = off\nlambda = 0\nbatch_size = 8\nlr = 1e-4\n";

fn overfit() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut rows = Vec::new();
    for i in 0..32 {
        let seq = random_sequence(&mut rng, 30..120);
        rows.push((format!("p{i}"), seq, format!("l{i}"), random_smiles(&mut rng, 1..6)));
    }
    let teacher = Model::new(config(&format!("{OVERFIT_CONFIG}seed = 1001\n")), KnowledgeGraph::new()).map_err(|e| e.to_string())?;
    let graphs: Vec<MolecularGraph> = rows.iter().map(|r| parse_smiles(&r.3)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let raw: Vec<f64> = rows
        .iter()
        .zip(&graphs)
        .map(|(r, g)| teacher.predict_pair(PairInput { protein_id: &r.0, sequence: &r.1, ligand_id: &r.2, graph: g }, Padding::default()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let std = (raw.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / raw.len() as f64).sqrt();
    let labels: Vec<f64> = raw.iter().map(|y| (y - mean) / std).collect();

    let mut samples: Vec<ComplexSample> = rows
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (r, &y))| sample(format!("T{i:02}"), &r.0, &r.1, &r.2, &r.3, y))
        .collect();
    // validation rows repeat training pairs under new ids
    for i in 0..4 {
        let r = &rows[i];
        samples.push(sample(format!("V{i:02}"), &r.0, &r.1, &r.2, &r.3, labels[i]));
    }
    let ds = Dataset::from_samples(samples).map_err(|e| e.to_string())?;
    let split = DatasetSplit {
        protocol: "manual".into(),
        seed: 0,
        params: Vec::new(),
        labels: (0..ds.len()).map(|i| Some(if i < 32 { SplitLabel::Train } else { SplitLabel::Val })).collect(),
        checks: Vec::new(),
    };
    let train_idx: Vec<usize> = (0..32).collect();
    let mut best = (f64::INFINITY, 0usize);
    let mut reached: Option<usize> = None;
    let cfg = config(&format!("{OVERFIT_CONFIG}seed = 5\nepochs = 2000\n"));
    train_with(cfg, &ds, &split, KnowledgeGraph::new(), |model, log| {
        if reached.is_some() || log.epoch % 10 != 0 {
            return;
        }
        let preds = predict_indices(model, &ds, &train_idx).expect("prediction");
        let mae = preds.iter().zip(&labels).map(|(p, y)| (p - y).abs()).sum::<f64>() / 32.0;
        if mae < best.0 {
            best = (mae, log.epoch);
        }
        if mae < 0.05 {
            reached = Some(log.epoch);
        }
    })
    .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("best train MAE {:.4} at epoch {}; {secs:.1}s", best.0, best.1);
    match reached {
        Some(epoch) if secs < 300.0 => Ok(format!("train MAE < 0.05 at epoch {epoch}; {detail}")),
        _ => Err(detail),
    }
}

fn criterion_5() -> Outcome {
    match overfit() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

// 6 ---------------------------------------------------------------------

fn kge_effectiveness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let kg = toy_kg(&mut rng);
    let proteins: Vec<(String, String)> = (0..2).map(|i| (format!("p{i}"), random_sequence(&mut rng, 40..=40))).collect();
    let ligands = [("l0", "CC(=O)Nc1ccccc1O"), ("l1", "OCC(N)C(=O)O")];
    let mut samples = Vec::new();
    for (a, (pid, seq)) in proteins.iter().enumerate() {
        for (b, (lid, smi)) in ligands.iter().enumerate() {
            samples.push(sample(format!("S{a}{b}"), pid, seq, lid, smi, 5.0 + a as f64 - b as f64));
        }
    }
    let ds = Dataset::from_samples(samples).map_err(|e| e.to_string())?;
    let split = DatasetSplit {
        protocol: "manual".into(),
        seed: 0,
        params: Vec::new(),
        labels: (0..ds.len()).map(|i| Some(if i < 3 { SplitLabel::Train } else { SplitLabel::Val })).collect(),
        checks: Vec::new(),
    };
    let cfg = config(
        "dim = 8\nprovider_dim = 8\nprotein_hidden = 16\nligand_layers = 2\ndecoder_hidden = 16\n\
         beta = 1\nfreeze_decoder = true\nlr = 1e-3\nbatch_size = 4\nepochs = 200\nseed = 9\n",
    );
    let mean_score = |m: &Model| -> Result<f64, String> {
        let emb = m.kg_embeddings.as_ref().ok_or("no KG embeddings")?;
        let mut total = 0.0;
        for t in kg.triples() {
            let head = &kg.entity(t.head).id;
            let h = m.head_vector(head).map_err(|e| e.to_string())?;
            let r = emb.relation_vector(&m.store, emb.relation_column(&kg.relations()[t.relation]).unwrap());
            let tv = emb.tail_vector(&m.store, emb.tail_column(&kg.entity(t.tail).id).unwrap());
            let kind = EntityType::of_id(head).unwrap();
            total += if kind == EntityType::Protein { score_rotate(&h, &r, &tv) } else { score_transe(&h, &r, &tv) }
                .map_err(|e| e.to_string())?;
        }
        Ok(total / kg.triples().len() as f64)
    };
    let mut initial = Model::new(cfg.clone(), kg.clone()).map_err(|e| e.to_string())?;
    for s in ds.samples() {
        initial.head_inputs.insert(format!("P:{}", s.protein_id), s.sequence.clone());
        initial.head_inputs.insert(format!("L:{}", s.ligand_id), s.smiles.clone());
    }
    let before = mean_score(&initial)?;
    let out = train(cfg, &ds, &split, kg.clone()).map_err(|e| e.to_string())?;
    let after = mean_score(&out.last)?;
    let ratio = after / before;
    let detail = format!("mean triple score {before:.4} -> {after:.4} (ratio {ratio:.3})");
    if ratio < 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    match kge_effectiveness() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

// 7 ---------------------------------------------------------------------

fn bfs_components(n: usize, linked: &dyn Fn(usize, usize) -> bool) -> BTreeSet<BTreeSet<usize>> {
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            comp.insert(u);
            for v in 0..n {
                if !seen[v] && linked(u, v) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        out.insert(comp);
    }
    out
}

fn split_corpus() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut proteins: Vec<(String, String)> = (0..30).map(|i| (format!("PR{i:02}"), random_sequence(&mut rng, 40..160))).collect();
    for i in 0..10 {
        let seq = proteins[i * 3].1.clone();
        proteins.push((format!("PR{:02}", 30 + i), seq));
    }
    let ligands: Vec<(String, String)> = (0..60).map(|i| (format!("LG{i:02}"), random_smiles(&mut rng, 1..7))).collect();
    let mut samples = Vec::new();
    for (pid, seq) in &proteins {
        let mut picks: Vec<usize> = (0..ligands.len()).collect();
        picks.shuffle(&mut rng);
        for &l in &picks[..6] {
            let (lid, smi) = &ligands[l];
            samples.push(sample(format!("X{:03}", samples.len()), pid, seq, lid, smi, rng.gen_range(2.0..10.0)));
        }
    }
    Dataset::from_samples(samples).expect("synthetic corpus")
}

fn split_guarantees() -> Result<String, String> {
    let ds = split_corpus();
    let params = ClusterSplitParams::default();
    let pids = ds.protein_ids();
    let lids = ds.ligand_ids();
    let pc = protein_clusters(&ds, &pids, params.gamma_protein).map_err(|e| e.to_string())?;
    let lc = ligand_clusters(&ds, &lids, params.gamma_ligand);
    let p_index: BTreeMap<&str, usize> = pids.iter().enumerate().map(|(i, p)| (*p, pc.labels[i])).collect();
    let l_index: BTreeMap<&str, usize> = lids.iter().enumerate().map(|(i, l)| (*l, lc.labels[i])).collect();

    let (mut produced, mut degenerate, mut spanning) = (0, 0, 0);
    for seed in 0..20 {
        let s = match clustering_pair_split(&ds, params, seed) {
            Ok(s) => s,
            Err(DatasetError::Protocol(_)) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        produced += 1;
        let mut p_dom: BTreeMap<usize, BTreeSet<bool>> = BTreeMap::new();
        let mut l_dom: BTreeMap<usize, BTreeSet<bool>> = BTreeMap::new();
        for (i, label) in s.labels.iter().enumerate() {
            let Some(label) = label else { continue };
            if *label == SplitLabel::Val {
                continue;
            }
            let target = matches!(label, SplitLabel::Train | SplitLabel::TargetTest);
            let x = ds.sample(i);
            p_dom.entry(p_index[x.protein_id.as_str()]).or_default().insert(target);
            l_dom.entry(l_index[x.ligand_id.as_str()]).or_default().insert(target);
        }
        spanning += p_dom.values().chain(l_dom.values()).filter(|d| d.len() > 1).count();
        if !s.all_checks_pass() {
            return Err(format!("cluster seed {seed}: {:?}", s.checks));
        }
    }
    if spanning > 0 || produced == 0 {
        return Err(format!("{spanning} spanning clusters over {produced} cluster splits"));
    }

    let mut shared = 0;
    for seed in 0..20 {
        let s = cold_pair_split(&ds, seed).map_err(|e| format!("cold seed {seed}: {e}"))?;
        let ids = |label: SplitLabel| -> (BTreeSet<String>, BTreeSet<String>) {
            s.indices(label).into_iter().map(|i| (ds.sample(i).protein_id.clone(), ds.sample(i).ligand_id.clone())).unzip()
        };
        let (tp, tl) = ids(SplitLabel::Train);
        for label in [SplitLabel::Test, SplitLabel::Val] {
            let (p, l) = ids(label);
            shared += p.intersection(&tp).count() + l.intersection(&tl).count();
        }
        if s.indices(SplitLabel::Test).is_empty() {
            return Err(format!("cold seed {seed}: empty test set"));
        }
    }
    if shared > 0 {
        return Err(format!("{shared} ids shared between cold train and held-out sets"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(72);
    for round in 0..50 {
        let n = rng.gen_range(1..60);
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                let v = rng.gen_range(0.0..1.0);
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        let gamma = rng.gen_range(0.0..0.2);
        let got = single_linkage_clusters(n, |i, j| d[i][j], gamma);
        let parts: BTreeSet<BTreeSet<usize>> = (0..got.count).map(|c| got.members(c).into_iter().collect()).collect();
        if parts != bfs_components(n, &|i, j| i != j && d[i][j] < gamma) {
            return Err(format!("single linkage differs from components on matrix {round}"));
        }
    }
    Ok(format!(
        "{} pairs; cluster: {produced} splits, {degenerate} degenerate seeds reported, 0 spanning clusters; cold: 20 splits, 0 shared ids; 50 linkage matrices",
        ds.len()
    ))
}

fn criterion_7() -> Outcome {
    match split_guarantees() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

// 8 ---------------------------------------------------------------------

fn metrics_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(3..200);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..12.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v + rng.gen_range(-2.0..2.0)).collect();
        let m = evaluate(&x, &y).map_err(|e| e.to_string())?;
        let nf = n as f64;
        let rmse = (x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / nf).sqrt();
        let mae = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / nf;
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx = x.iter().map(|v| v * v).sum::<f64>();
        let syy = y.iter().map(|v| v * v).sum::<f64>();
        let sxy = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        let r = (nf * sxy - sx * sy) / ((nf * sxx - sx * sx).sqrt() * (nf * syy - sy * sy).sqrt());
        // normal equations by Cramer's rule
        let det = nf * sxx - sx * sx;
        let slope = (nf * sxy - sx * sy) / det;
        let icept = (sy * sxx - sx * sxy) / det;
        let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum();
        let sd = (rss / (nf - 1.0)).sqrt();
        let (mr, msd) = (m.r.ok_or("r undefined")?, m.sd.ok_or("sd undefined")?);
        for (got, want) in [(m.rmse, rmse), (m.mae, mae), (mr, r), (msd, sd)] {
            worst = worst.max((got - want).abs());
        }
    }
    if worst > 1e-9 {
        return Err(format!("metrics deviate from references by {worst:.3e}"));
    }
    let perfect = evaluate(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).map_err(|e| e.to_string())?;
    if (perfect.rmse, perfect.mae, perfect.sd, perfect.r) != (0.0, 0.0, Some(0.0), Some(1.0)) {
        return Err(format!("perfect fit gave {perfect:?}"));
    }
    let anti = evaluate(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).map_err(|e| e.to_string())?;
    if (anti.sd, anti.r) != (Some(0.0), Some(-1.0)) {
        return Err(format!("anti-linear fit gave {anti:?}"));
    }
    Ok(format!("100 random pairs within {worst:.1e}; perfect and anti-linear cases exact"))
}

fn criterion_8() -> Outcome {
    match metrics_oracle() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

// 9 ---------------------------------------------------------------------

fn manifest_counts(text: &str) -> BTreeMap<(String, String), usize> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            ((f[0].to_string(), f[1].to_string()), f[2].parse().expect("count"))
        })
        .collect()
}

fn summary_counts(kg: &KnowledgeGraph) -> BTreeMap<(String, String), usize> {
    let s = kg.summary();
    let mut out = BTreeMap::new();
    for t in EntityType::ALL {
        out.insert(("entities".to_string(), t.prefix().to_string()), s.entity_count(t));
        if !t.is_head() {
            out.insert(("triples".to_string(), t.prefix().to_string()), s.triple_count(t));
        }
    }
    out
}

fn criterion_9a() -> Outcome {
    let run = || -> Result<String, String> {
        let kg = KnowledgeGraph::ingest_triples(&fixture("complexes_kg.tsv")).map_err(|e| e.to_string())?;
        let manifest = manifest_counts(&std::fs::read_to_string(fixture("complexes_kg.manifest")).map_err(|e| e.to_string())?);
        let got = summary_counts(&kg);
        if got != manifest {
            return Err(format!("summary {got:?} differs from manifest {manifest:?}"));
        }
        Ok(format!("{} triples match the manifest", kg.triples().len()))
    };
    match run() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

/// Triples with the published per-type entity and triple counts.
fn table_scale_kg_text() -> String {
    let heads = [("P", 2542), ("L", 3181)];
    let tails = [("BP", 580, 4827, 0, "involved_in"), ("CC", 165, 3598, 0, "located_in"), ("MF", 255, 3434, 0, "enables"), ("MD", 175, 28629, 1, "has_descriptor"), ("CF", 23, 19727, 1, "has_feature")];
    let mut text = String::new();
    for (prefix, n_tails, n_triples, head, rel) in tails {
        let (hp, n_heads) = heads[head];
        let mut seen = BTreeSet::new();
        let mut k = 0usize;
        while seen.len() < n_triples {
            let pair = (k % n_heads, (k + k / n_heads) % n_tails);
            k += 1;
            if seen.insert(pair) {
                text.push_str(&format!("{hp}:{}\t{rel}\t{prefix}:{}\n", pair.0, pair.1));
            }
        }
    }
    text
}

fn criterion_9b() -> Outcome {
    let kg = match KnowledgeGraph::parse(&table_scale_kg_text()) {
        Ok(kg) => kg,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let s = kg.summary();
    let entities = [
        (EntityType::Protein, 2542),
        (EntityType::BP, 580),
        (EntityType::CC, 165),
        (EntityType::MF, 255),
        (EntityType::Ligand, 3181),
        (EntityType::MD, 175),
        (EntityType::CF, 23),
    ];
    let ok = s.protein_go() == 11_859
        && s.ligand_lp() == 48_356
        && entities.iter().all(|&(t, n)| s.entity_count(t) == n);
    Outcome::new(ok, format!("synthetic graph at published scale: {} protein-GO, {} ligand-LP triples", s.protein_go(), s.ligand_lp()))
}

fn criterion_9c() -> Outcome {
    let Some(dir) = std::env::var_os("KEPLA_RELEASED_KG") else {
        return Outcome {
            pass: false,
            unverified: true,
            detail: "released KG files are not shipped; set KEPLA_RELEASED_KG to a directory of triple files".into(),
        };
    };
    let run = || -> Result<String, String> {
        let mut text = String::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        paths.sort();
        for p in paths {
            text.push_str(&std::fs::read_to_string(p).map_err(|e| e.to_string())?);
        }
        let s = KnowledgeGraph::parse(&text).map_err(|e| e.to_string())?.summary();
        let detail = format!("{} protein-GO, {} ligand-LP triples", s.protein_go(), s.ligand_lp());
        if s.protein_go() == 11_859 && s.ligand_lp() == 48_356 {
            Ok(detail)
        } else {
            Err(detail)
        }
    };
    match run() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

// 10 --------------------------------------------------------------------

fn fixture_data() -> (Dataset, DatasetSplit, KnowledgeGraph) {
    let ds = Dataset::load(&fixture("complexes.tsv")).unwrap();
    let split = random_split(&ds, &[0.8, 0.1, 0.1], 3).unwrap();
    let kg = KnowledgeGraph::ingest_triples(&fixture("complexes_kg.tsv")).unwrap();
    (ds, split, kg)
}

fn criterion_10() -> Outcome {
    let run = || -> Result<String, String> {
        let (ds, split, kg) = fixture_data();
        let mut cfg = RunConfig::parse(&std::fs::read_to_string(fixture("small.conf")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        cfg.epochs = 5;
        let dir = std::env::temp_dir().join(format!("kepla-acceptance-{}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for run in 0..2 {
            let out = train(cfg.clone(), &ds, &split, kg.clone()).map_err(|e| e.to_string())?;
            let path = dir.join(format!("run{run}.ckpt"));
            out.best.save(&path).map_err(|e| e.to_string())?;
            files.push((std::fs::read(&path).map_err(|e| e.to_string())?, out.log_text()));
        }
        let _ = std::fs::remove_dir_all(&dir);
        if files[0] != files[1] {
            return Err("checkpoints or logs differ between identical runs".into());
        }
        Ok(format!("{}-byte checkpoints and 5-line logs identical", files[0].0.len()))
    };
    match run() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

// 11 --------------------------------------------------------------------

fn trajectory(cfg: RunConfig) -> Result<Vec<Vec<u64>>, String> {
    let (ds, split, kg) = fixture_data();
    let mut snaps = Vec::new();
    train_with(cfg, &ds, &split, kg, |m, _| {
        snaps.push(m.store.iter().flat_map(|(_, _, t)| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect());
    })
    .map_err(|e| e.to_string())?;
    Ok(snaps)
}

fn criterion_11() -> Outcome {
    let run = || -> Result<String, String> {
        let base = "dim = 8\nprovider_dim = 8\nprotein_hidden = 16\nligand_layers = 2\ndecoder_hidden = 16\nbatch_size = 8\nlr = 1e-3\nepochs = 4\nseed = 12\n";
        let zero = trajectory(config(&format!("{base}beta = 0\n")))?;
        let off = trajectory(config(&format!("{base}kg = off\n")))?;
        if zero != off {
            return Err("β = 0 and kg = off trajectories differ".into());
        }

        let mut notes = Vec::new();
        for (i, mode) in [FusionMode::Cross, FusionMode::ProteinAttn, FusionMode::LigandAttn, FusionMode::Concat].into_iter().enumerate() {
            let (err, _) = gradient_check(mode)?;
            if err >= 1e-4 {
                return Err(format!("{}: gradient error {err:.3e}", mode.as_str()));
            }
            attention_instances(mode, 250, 110 + i as u64).map_err(|e| format!("{}: {e}", mode.as_str()))?;
            invariance(mode, 25, 120 + i as u64).map_err(|e| format!("{}: {e}", mode.as_str()))?;
            notes.push(format!("{} grad {err:.1e}", mode.as_str()));
        }

        // the modes select distinct joint representations from the same parameters
        let (ds, _, kg) = fixture_data();
        let joints: BTreeSet<Vec<u64>> = ["cross", "protein-attn", "ligand-attn", "concat"]
            .iter()
            .map(|f| {
                let m = Model::new(config(&format!("{base}fusion = {f}\n")), kg.clone()).unwrap();
                let mut tape = Tape::new();
                let fwd = m.forward_pair(&mut tape, pair_input(&ds, 0), Padding::default()).unwrap();
                tape.value(fwd.fused.joint).data().iter().map(|v| v.to_bits()).collect()
            })
            .collect();
        if joints.len() != 4 {
            return Err("fusion modes do not produce distinct joint representations".into());
        }
        Ok(format!("β = 0 matches kg = off over {} epochs; {}", zero.len(), notes.join(", ")))
    };
    match run() {
        Ok(d) => Outcome::new(true, d),
        Err(e) => Outcome::new(false, e),
    }
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 gradient integrity", criterion_1),
        ("2 attention contract", criterion_2),
        ("3 permutation and padding invariance", criterion_3),
        ("4 KG score correctness", criterion_4),
        ("5 overfit capacity", criterion_5),
        ("6 KGE effectiveness", criterion_6),
        ("7 split guarantees", criterion_7),
        ("8 metrics oracle", criterion_8),
        ("9a bundled KG sample matches manifest", criterion_9a),
        ("9b ingestion at published scale", criterion_9b),
        ("9c released KG counts", criterion_9c),
        ("10 determinism", criterion_10),
        ("11 ablation mechanics", criterion_11),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.unverified { " (unverified)" } else { "" };
        println!("[{tag}] {name}{note}: {}", o.detail);
        if !o.pass && !o.unverified {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
