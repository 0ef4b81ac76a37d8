//! Split protocols and manifests.
//!
//! Every protocol draws from one `ChaCha8Rng` seeded with the run seed and
//! uses `SliceRandom::shuffle` on index lists. Proportional counts are
//! rounded half away from zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chem::{morgan_fingerprint, Fingerprint, DEFAULT_FP_BITS, DEFAULT_FP_RADIUS};
use crate::encoders::{cosine_distance, psc_features};

use super::{single_linkage_clusters, ClusterAssignment, Dataset, DatasetError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitLabel {
    Train,
    Val,
    Test,
    /// Source-domain training sample of the clustering split.
    Source,
    /// Held-out target-domain sample of the clustering split.
    TargetTest,
}

impl SplitLabel {
    pub const ALL: [SplitLabel; 5] =
        [SplitLabel::Train, SplitLabel::Val, SplitLabel::Test, SplitLabel::Source, SplitLabel::TargetTest];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitLabel::Train => "train",
            SplitLabel::Val => "val",
            SplitLabel::Test => "test",
            SplitLabel::Source => "source",
            SplitLabel::TargetTest => "target_test",
        }
    }

    /// Whether the trainer fits on samples with this label.
    pub fn is_training(self) -> bool {
        matches!(self, SplitLabel::Train | SplitLabel::Source)
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| format!("unknown split label {s}"))
    }
}

/// Per-sample labels with the protocol record and guarantee checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub protocol: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
    /// Indexed like the dataset; `None` means the sample is unused.
    pub labels: Vec<Option<SplitLabel>>,
    pub checks: Vec<(String, bool)>,
}

impl DatasetSplit {
    pub fn indices(&self, label: SplitLabel) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == Some(label)).collect()
    }

    pub fn training_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_some_and(SplitLabel::is_training)).collect()
    }

    /// Labels in use, in [`SplitLabel::ALL`] order.
    pub fn partitions(&self) -> Vec<SplitLabel> {
        let used: BTreeSet<SplitLabel> = self.labels.iter().flatten().copied().collect();
        SplitLabel::ALL.into_iter().filter(|l| used.contains(l)).collect()
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    /// `# key=value` header lines, then `sample_id<TAB>label` per used sample.
    pub fn to_manifest(&self, dataset: &Dataset) -> String {
        let mut out = format!("# protocol={}\n# seed={}\n", self.protocol, self.seed);
        for (k, v) in &self.params {
            out.push_str(&format!("# param.{k}={v}\n"));
        }
        for (k, ok) in &self.checks {
            out.push_str(&format!("# check.{k}={}\n", if *ok { "pass" } else { "fail" }));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(l) = l {
                out.push_str(&format!("{}\t{l}\n", dataset.sample(i).id));
            }
        }
        out
    }

    pub fn from_manifest(text: &str, dataset: &Dataset) -> Result<Self, DatasetError> {
        let mut split = DatasetSplit {
            protocol: "manifest".into(),
            seed: 0,
            params: Vec::new(),
            labels: vec![None; dataset.len()],
            checks: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let bad = |msg: String| DatasetError::Malformed { line: line_no, msg };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let Some((k, v)) = h.trim().split_once('=') else { continue };
                match k {
                    "protocol" => split.protocol = v.to_string(),
                    "seed" => split.seed = v.parse().map_err(|_| bad(format!("bad seed {v}")))?,
                    _ => {
                        if let Some(p) = k.strip_prefix("param.") {
                            split.params.push((p.to_string(), v.to_string()));
                        } else if let Some(c) = k.strip_prefix("check.") {
                            split.checks.push((c.to_string(), v == "pass"));
                        }
                    }
                }
                continue;
            }
            let (id, label) = line.split_once('\t').ok_or_else(|| bad("expected sample_id<TAB>label".into()))?;
            let i = dataset.index_of(id.trim()).ok_or_else(|| bad(format!("unknown sample {id}")))?;
            if split.labels[i].is_some() {
                return Err(DatasetError::Duplicate { line: line_no, id: id.to_string() });
            }
            split.labels[i] = Some(label.trim().parse().map_err(bad)?);
        }
        Ok(split)
    }
}

fn proportion(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).min(n)
}

/// Largest-remainder allocation of `n` items to `ratios`.
fn allocate(n: usize, ratios: &[f64]) -> Vec<usize> {
    let total: f64 = ratios.iter().sum();
    let exact: Vec<f64> = ratios.iter().map(|r| n as f64 * r / total).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = n - sizes.iter().sum::<usize>();
    for &k in order.iter().take(missing) {
        sizes[k] += 1;
    }
    sizes
}

/// Uniform shuffle, then consecutive blocks sized by largest remainder.
/// One ratio gives `train`, two `train`/`val`, three `train`/`val`/`test`.
pub fn random_split(dataset: &Dataset, ratios: &[f64], seed: u64) -> Result<DatasetSplit, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let total: f64 = ratios.iter().sum();
    if ratios.is_empty() || ratios.len() > 3 || ratios.iter().any(|&r| !(r > 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(DatasetError::Protocol(format!("ratios must be 1 to 3 positive values summing to 1, got {ratios:?}")));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let names = [SplitLabel::Train, SplitLabel::Val, SplitLabel::Test];
    let mut labels = vec![None; dataset.len()];
    let mut start = 0;
    let sizes = allocate(dataset.len(), ratios);
    for (k, &size) in sizes.iter().enumerate() {
        for &i in &order[start..start + size] {
            labels[i] = Some(names[k]);
        }
        start += size;
    }
    let within = sizes
        .iter()
        .zip(ratios)
        .all(|(&s, r)| (s as f64 - dataset.len() as f64 * r).abs() <= 1.0);
    Ok(DatasetSplit {
        protocol: "random".into(),
        seed,
        params: vec![("ratios".into(), ratios.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(":"))],
        labels,
        checks: vec![("sizes_within_one".into(), within), ("all_assigned".into(), start == dataset.len())],
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterSplitParams {
    pub gamma_protein: f64,
    pub gamma_ligand: f64,
    pub fraction: f64,
    pub target_train: f64,
    pub val_fraction: f64,
}

impl Default for ClusterSplitParams {
    fn default() -> Self {
        Self { gamma_protein: 0.001, gamma_ligand: 0.5, fraction: 0.6, target_train: 0.8, val_fraction: 0.1 }
    }
}

/// Cosine distance on composition features, per protein of `ids`.
pub fn protein_clusters(dataset: &Dataset, ids: &[&str], gamma: f64) -> Result<ClusterAssignment, DatasetError> {
    let seqs: BTreeMap<&str, &str> = dataset.samples().iter().map(|s| (s.protein_id.as_str(), s.sequence.as_str())).collect();
    let feats = ids.iter().map(|id| psc_features(seqs[id])).collect::<Result<Vec<_>, _>>()?;
    Ok(single_linkage_clusters(ids.len(), |i, j| cosine_distance(&feats[i], &feats[j]), gamma))
}

pub fn ligand_fingerprints(dataset: &Dataset, ids: &[&str]) -> Vec<Fingerprint> {
    ids.iter()
        .map(|id| {
            let g = dataset.graph(id).expect("ligand parsed at load");
            morgan_fingerprint(g, DEFAULT_FP_RADIUS, DEFAULT_FP_BITS).expect("default width is valid")
        })
        .collect()
}

/// Jaccard distance on fingerprints, per ligand of `ids`.
pub fn ligand_clusters(dataset: &Dataset, ids: &[&str], gamma: f64) -> ClusterAssignment {
    let fps = ligand_fingerprints(dataset, ids);
    single_linkage_clusters(ids.len(), |i, j| fps[i].jaccard_distance(&fps[j]), gamma)
}

fn pick_clusters(count: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(rng);
    let mut chosen = vec![false; count];
    for &c in order.iter().take(proportion(count, fraction)) {
        chosen[c] = true;
    }
    chosen
}

/// Cross-domain split. Shuffles protein clusters then ligand clusters and
/// selects `fraction` of each; source pairs have both sides selected, target
/// pairs neither, mixed pairs are dropped. Target pairs are shuffled and the
/// first `target_train` share joins the source; that pool (source first, in
/// dataset order) is shuffled and its first `val_fraction` becomes `val`.
pub fn clustering_pair_split(dataset: &Dataset, p: ClusterSplitParams, seed: u64) -> Result<DatasetSplit, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let pids = dataset.protein_ids();
    let lids = dataset.ligand_ids();
    let pc = protein_clusters(dataset, &pids, p.gamma_protein)?;
    let lc = ligand_clusters(dataset, &lids, p.gamma_ligand);
    let pindex: BTreeMap<&str, usize> = pids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let lindex: BTreeMap<&str, usize> = lids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psel = pick_clusters(pc.count, p.fraction, &mut rng);
    let lsel = pick_clusters(lc.count, p.fraction, &mut rng);

    let clusters_of = |i: usize| {
        let s = dataset.sample(i);
        (pc.labels[pindex[s.protein_id.as_str()]], lc.labels[lindex[s.ligand_id.as_str()]])
    };
    let (mut source, mut target) = (Vec::new(), Vec::new());
    for i in 0..dataset.len() {
        let (a, b) = clusters_of(i);
        match (psel[a], lsel[b]) {
            (true, true) => source.push(i),
            (false, false) => target.push(i),
            _ => {}
        }
    }
    if source.is_empty() || target.is_empty() {
        return Err(DatasetError::Protocol(format!(
            "clustering split is degenerate: {} protein clusters, {} ligand clusters, {} source and {} target pairs",
            pc.count,
            lc.count,
            source.len(),
            target.len()
        )));
    }
    target.shuffle(&mut rng);
    let n_target_train = proportion(target.len(), p.target_train);
    let (target_train, target_test) = target.split_at(n_target_train);
    if target_test.is_empty() {
        return Err(DatasetError::Protocol(format!(
            "clustering split leaves no target test pairs: {} protein clusters, {} ligand clusters, {} target pairs",
            pc.count,
            lc.count,
            target.len()
        )));
    }
    let mut pool: Vec<usize> = source.iter().chain(target_train).copied().collect();
    pool.shuffle(&mut rng);
    let n_val = proportion(pool.len(), p.val_fraction);

    let mut labels = vec![None; dataset.len()];
    let source_set: BTreeSet<usize> = source.iter().copied().collect();
    for (k, &i) in pool.iter().enumerate() {
        labels[i] = Some(if k < n_val {
            SplitLabel::Val
        } else if source_set.contains(&i) {
            SplitLabel::Source
        } else {
            SplitLabel::Train
        });
    }
    for &i in target_test {
        labels[i] = Some(SplitLabel::TargetTest);
    }

    let domain_sets = |members: &[usize]| -> (BTreeSet<usize>, BTreeSet<usize>) {
        members.iter().map(|&i| clusters_of(i)).unzip()
    };
    let (sp, sl) = domain_sets(&source);
    let (tp, tl) = domain_sets(&target);
    let checks = vec![
        ("protein_clusters_single_domain".into(), sp.is_disjoint(&tp)),
        ("ligand_clusters_single_domain".into(), sl.is_disjoint(&tl)),
    ];
    Ok(DatasetSplit {
        protocol: "cluster".into(),
        seed,
        params: vec![
            ("gamma_protein".into(), p.gamma_protein.to_string()),
            ("gamma_ligand".into(), p.gamma_ligand.to_string()),
            ("fraction".into(), p.fraction.to_string()),
            ("target_train".into(), p.target_train.to_string()),
            ("val_fraction".into(), p.val_fraction.to_string()),
            ("protein_clusters".into(), pc.count.to_string()),
            ("ligand_clusters".into(), lc.count.to_string()),
        ],
        labels,
        checks,
    })
}

pub const COLD_FRACTION: f64 = 0.7;
pub const COLD_VAL_SHARE: f64 = 0.3;

/// Cold pair split. Protein ids (first-appearance order) are shuffled and
/// the first 70% marked seen, then ligand ids likewise with the same
/// generator. Both-seen pairs train; both-unseen pairs (dataset order) are
/// shuffled and the first 30% become `val`, the rest `test`; mixed pairs
/// are dropped.
pub fn cold_pair_split(dataset: &Dataset, seed: u64) -> Result<DatasetSplit, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |ids: Vec<&str>| -> BTreeSet<String> {
        let mut ids = ids;
        ids.shuffle(&mut rng);
        let k = proportion(ids.len(), COLD_FRACTION);
        ids[..k].iter().map(|s| s.to_string()).collect()
    };
    let seen_p = pick(dataset.protein_ids());
    let seen_l = pick(dataset.ligand_ids());
    let mut labels = vec![None; dataset.len()];
    let mut unseen = Vec::new();
    for (i, s) in dataset.samples().iter().enumerate() {
        match (seen_p.contains(&s.protein_id), seen_l.contains(&s.ligand_id)) {
            (true, true) => labels[i] = Some(SplitLabel::Train),
            (false, false) => unseen.push(i),
            _ => {}
        }
    }
    unseen.shuffle(&mut rng);
    let n_val = proportion(unseen.len(), COLD_VAL_SHARE);
    for (k, &i) in unseen.iter().enumerate() {
        labels[i] = Some(if k < n_val { SplitLabel::Val } else { SplitLabel::Test });
    }
    if unseen.len() == n_val {
        return Err(DatasetError::Protocol(format!(
            "cold split has an empty test set ({} proteins, {} ligands, {} unseen pairs)",
            dataset.protein_ids().len(),
            dataset.ligand_ids().len(),
            unseen.len()
        )));
    }
    let ids_of = |label: SplitLabel| -> (BTreeSet<&str>, BTreeSet<&str>) {
        (0..labels.len())
            .filter(|&i| labels[i] == Some(label))
            .map(|i| (dataset.sample(i).protein_id.as_str(), dataset.sample(i).ligand_id.as_str()))
            .unzip()
    };
    let (trp, trl) = ids_of(SplitLabel::Train);
    let (tep, tel) = ids_of(SplitLabel::Test);
    let (vap, val) = ids_of(SplitLabel::Val);
    let checks = vec![
        ("test_proteins_unseen".into(), trp.is_disjoint(&tep)),
        ("test_ligands_unseen".into(), trl.is_disjoint(&tel)),
        ("val_proteins_unseen".into(), trp.is_disjoint(&vap)),
        ("val_ligands_unseen".into(), trl.is_disjoint(&val)),
    ];
    Ok(DatasetSplit {
        protocol: "cold".into(),
        seed,
        params: vec![
            ("seen_fraction".into(), COLD_FRACTION.to_string()),
            ("val_share".into(), COLD_VAL_SHARE.to_string()),
        ],
        labels,
        checks,
    })
}

/// Default ratios of the `random` protocol: train, val, test.
pub const RANDOM_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

/// Runs a protocol by name (`random`, `cluster` or `cold`) with default parameters.
pub fn split_by_protocol(dataset: &Dataset, protocol: &str, seed: u64) -> Result<DatasetSplit, DatasetError> {
    match protocol {
        "random" => random_split(dataset, &RANDOM_RATIOS, seed),
        "cluster" => clustering_pair_split(dataset, ClusterSplitParams::default(), seed),
        "cold" => cold_pair_split(dataset, seed),
        other => Err(DatasetError::Protocol(format!("unknown protocol {other}; expected random, cluster or cold"))),
    }
}
