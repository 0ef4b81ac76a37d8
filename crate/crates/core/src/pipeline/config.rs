//! Run configuration as `key = value` text.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::fusion::FusionMode;

use super::PipelineError;

/// Which head types contribute KGE terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KgMode {
    #[default]
    Full,
    ProteinOnly,
    LigandOnly,
    Off,
}

impl KgMode {
    pub fn as_str(self) -> &'static str {
        match self {
            KgMode::Full => "full",
            KgMode::ProteinOnly => "protein-only",
            KgMode::LigandOnly => "ligand-only",
            KgMode::Off => "off",
        }
    }

    pub fn uses_protein(self) -> bool {
        matches!(self, KgMode::Full | KgMode::ProteinOnly)
    }

    pub fn uses_ligand(self) -> bool {
        matches!(self, KgMode::Full | KgMode::LigandOnly)
    }
}

impl FromStr for KgMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [KgMode::Full, KgMode::ProteinOnly, KgMode::LigandOnly, KgMode::Off]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown kg mode {s}; expected full, protein-only, ligand-only or off"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ProviderMode {
    /// Learnable residue table of width `provider_dim`.
    #[default]
    Trainable,
    /// Precomputed embedding file.
    File(PathBuf),
}

impl ProviderMode {
    fn to_text(&self) -> String {
        match self {
            ProviderMode::Trainable => "trainable".into(),
            ProviderMode::File(p) => format!("file:{}", p.display()),
        }
    }
}

impl FromStr for ProviderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "trainable" => Ok(ProviderMode::Trainable),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(ProviderMode::File(p.into())),
                _ => Err(format!("unknown provider {s}; expected trainable or file:<path>")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KgeObjective {
    /// Mean routed score of the gathered triples.
    #[default]
    Score,
    /// Margin ranking against one corrupted tail per triple.
    Margin,
}

impl KgeObjective {
    pub fn as_str(self) -> &'static str {
        match self {
            KgeObjective::Score => "score",
            KgeObjective::Margin => "margin",
        }
    }
}

impl FromStr for KgeObjective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "score" => Ok(KgeObjective::Score),
            "margin" => Ok(KgeObjective::Margin),
            _ => Err(format!("unknown kge_loss {s}; expected score or margin")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Latent width `D`.
    pub dim: usize,
    /// Pooling window `s`.
    pub window: usize,
    /// Maximum residues `K`.
    pub k_max: usize,
    /// Maximum atoms `N`.
    pub n_max: usize,
    pub beta: f64,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub provider: ProviderMode,
    /// Residue table width when the provider is trainable.
    pub provider_dim: usize,
    /// Hidden widths of the protein DNN between `D_p` and `D`.
    pub protein_hidden: Vec<usize>,
    pub ligand_layers: usize,
    pub decoder_hidden: usize,
    pub kg: KgMode,
    pub fusion: FusionMode,
    pub freeze_decoder: bool,
    pub kge_loss: KgeObjective,
    pub kge_margin: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            window: 9,
            k_max: 1080,
            n_max: 290,
            beta: 0.1,
            lambda: 1e-5,
            lr: 1e-4,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            provider: ProviderMode::Trainable,
            provider_dim: 64,
            protein_hidden: vec![512],
            ligand_layers: 3,
            decoder_hidden: 512,
            kg: KgMode::Full,
            fusion: FusionMode::Cross,
            freeze_decoder: false,
            kge_loss: KgeObjective::Score,
            kge_margin: 1.0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 20] = [
    "dim",
    "window",
    "k_max",
    "n_max",
    "beta",
    "lambda",
    "lr",
    "batch_size",
    "epochs",
    "seed",
    "provider",
    "provider_dim",
    "protein_hidden",
    "ligand_layers",
    "decoder_hidden",
    "kg",
    "fusion",
    "freeze_decoder",
    "kge_loss",
    "kge_margin",
];

impl RunConfig {
    /// Starts from the defaults and applies every `key = value` line.
    /// `#` starts a comment; unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| PipelineError::Config { line: line_no, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key.to_string()) {
                return Err(bad(format!("key {key} given twice")));
            }
            seen.push(key.to_string());
            cfg.set(key, value).map_err(bad)?;
        }
        cfg.validate().map_err(|msg| PipelineError::Config { line: 0, msg })?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
        }
        match key {
            "dim" => self.dim = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "k_max" => self.k_max = num(key, value)?,
            "n_max" => self.n_max = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "provider" => self.provider = value.parse()?,
            "provider_dim" => self.provider_dim = num(key, value)?,
            "protein_hidden" => {
                self.protein_hidden = if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|w| num(key, w.trim())).collect::<Result<_, _>>()?
                }
            }
            "ligand_layers" => self.ligand_layers = num(key, value)?,
            "decoder_hidden" => self.decoder_hidden = num(key, value)?,
            "kg" => self.kg = value.parse()?,
            "fusion" => self.fusion = value.parse()?,
            "freeze_decoder" => self.freeze_decoder = num(key, value)?,
            "kge_loss" => self.kge_loss = value.parse()?,
            "kge_margin" => self.kge_margin = num(key, value)?,
            _ => return Err(format!("unknown key {key}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("k_max", self.k_max),
            ("n_max", self.n_max),
            ("batch_size", self.batch_size),
            ("provider_dim", self.provider_dim),
            ("ligand_layers", self.ligand_layers),
            ("decoder_hidden", self.decoder_hidden),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{k} must be positive"));
        }
        if self.protein_hidden.contains(&0) {
            return Err("protein_hidden widths must be positive".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(format!("beta must be a finite nonnegative number, got {}", self.beta));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(format!("lambda must be a finite nonnegative number, got {}", self.lambda));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.kge_margin > 0.0 && self.kge_margin.is_finite()) {
            return Err(format!("kge_margin must be positive, got {}", self.kge_margin));
        }
        Ok(())
    }

    /// Every key in [`CONFIG_KEYS`] order; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let hidden: Vec<String> = self.protein_hidden.iter().map(|w| w.to_string()).collect();
        let values = [
            self.dim.to_string(),
            self.window.to_string(),
            self.k_max.to_string(),
            self.n_max.to_string(),
            self.beta.to_string(),
            self.lambda.to_string(),
            self.lr.to_string(),
            self.batch_size.to_string(),
            self.epochs.to_string(),
            self.seed.to_string(),
            self.provider.to_text(),
            self.provider_dim.to_string(),
            hidden.join(","),
            self.ligand_layers.to_string(),
            self.decoder_hidden.to_string(),
            self.kg.as_str().to_string(),
            self.fusion.as_str().to_string(),
            self.freeze_decoder.to_string(),
            self.kge_loss.as_str().to_string(),
            self.kge_margin.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Protein DNN widths `[D_p, hidden.., D]`.
    pub fn protein_widths(&self, provider_dim: usize) -> Vec<usize> {
        std::iter::once(provider_dim).chain(self.protein_hidden.iter().copied()).chain([self.dim]).collect()
    }

    /// Ligand widths `[D; ligand_layers + 1]`: projection output then GCN layers.
    pub fn ligand_widths(&self) -> Vec<usize> {
        vec![self.dim; self.ligand_layers + 1]
    }
}
