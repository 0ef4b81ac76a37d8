use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use kepla::datasets::{random_split, split_by_protocol, Dataset, DatasetSplit};
use kepla::kg::{format_ranking, EntityType, KnowledgeGraph};
use kepla::pipeline::{evaluate_checkpoint, explain, explain_kg, predict, train, Checkpoint, RunConfig};

#[derive(Parser)]
#[command(name = "kepla", about = "Knowledge-enhanced protein-ligand affinity models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and keep the checkpoint with the lowest validation RMSE.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Triple TSV; omit to train without KG tables.
        #[arg(long)]
        kg: Option<PathBuf>,
        /// `id<TAB>name` display names for KG entities.
        #[arg(long)]
        kg_names: Option<PathBuf>,
        /// A manifest file, or `random`, `cluster` or `cold` to split with the config seed.
        #[arg(long)]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Metrics per split partition.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write per-sample predictions here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Predict affinity and attention for one pair.
    Predict {
        #[arg(long)]
        ckpt: PathBuf,
        /// Residue string, or a file holding one (FASTA headers are skipped).
        #[arg(long)]
        sequence: String,
        #[arg(long)]
        smiles: String,
        /// Needed when the checkpoint uses precomputed embeddings.
        #[arg(long)]
        protein_id: Option<String>,
    },
    /// Write a split manifest.
    Split {
        #[arg(long)]
        protocol: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated ratios for the random protocol.
        #[arg(long)]
        ratios: Option<String>,
    },
    /// Export attention weights for one dataset sample.
    Explain {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        sample: String,
    },
    /// Rank KG tails of a type for a protein or ligand entity.
    KgQuery {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        entity: String,
        #[arg(long = "type")]
        tail_type: EntityType,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_split(arg: &str, dataset: &Dataset, seed: u64) -> Result<DatasetSplit> {
    if matches!(arg, "random" | "cluster" | "cold") {
        return Ok(split_by_protocol(dataset, arg, seed)?);
    }
    Ok(DatasetSplit::from_manifest(&read(Path::new(arg))?, dataset)?)
}

fn sequence_arg(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if !path.is_file() {
        return Ok(arg.to_string());
    }
    Ok(read(path)?.lines().filter(|l| !l.starts_with('>')).map(str::trim).collect())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { config, data, kg, kg_names, split, out } => {
            let config = RunConfig::parse(&read(&config)?)?;
            let dataset = Dataset::load(&data)?;
            let split = load_split(&split, &dataset, config.seed)?;
            let mut graph = match kg {
                Some(p) => KnowledgeGraph::ingest_triples(&p)?,
                None => KnowledgeGraph::new(),
            };
            if let Some(p) = kg_names {
                graph.load_names(&read(&p)?)?;
            }
            fs::create_dir_all(&out)?;
            fs::write(out.join("config.txt"), config.to_text())?;
            fs::write(out.join("split.manifest"), split.to_manifest(&dataset))?;
            let outcome = train(config, &dataset, &split, graph)?;
            fs::write(out.join("train.log"), outcome.log_text())?;
            outcome.best.save(&out.join("model.ckpt"))?;
            print!("{}", outcome.log_text());
            println!("best_epoch\t{}\nbest_val_rmse\t{:.6}", outcome.best.epoch, outcome.best.val_rmse);
        }
        Command::Evaluate { ckpt, data, split, json, dump } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let dataset = Dataset::load(&data)?;
            let split = DatasetSplit::from_manifest(&read(&split)?, &dataset)?;
            let report = evaluate_checkpoint(&ckpt, &dataset, &split)?;
            print!("{}", report.to_text());
            if let Some(p) = json {
                fs::write(p, report.to_json())?;
            }
            if let Some(p) = dump {
                fs::write(p, report.predictions_tsv())?;
            }
        }
        Command::Predict { ckpt, sequence, smiles, protein_id } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let p = predict(&ckpt, protein_id.as_deref(), &sequence_arg(&sequence)?, &smiles)?;
            println!("affinity\t{:.6}", p.affinity);
            for (name, weights) in [("protein_attention", &p.protein_attention), ("ligand_attention", &p.ligand_attention)] {
                if let Some(w) = weights {
                    let w: Vec<String> = w.iter().map(|v| format!("{v:.6e}")).collect();
                    println!("{name}\t{}", w.join(","));
                }
            }
        }
        Command::Split { protocol, seed, data, out, ratios } => {
            let dataset = Dataset::load(&data)?;
            let split = match (protocol.as_str(), ratios) {
                ("random", Some(r)) => {
                    let r = r.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>()?;
                    random_split(&dataset, &r, seed)?
                }
                (_, Some(_)) => bail!("--ratios only applies to the random protocol"),
                (p, None) => split_by_protocol(&dataset, p, seed)?,
            };
            fs::write(&out, split.to_manifest(&dataset))?;
            for label in split.partitions() {
                println!("{label}\t{}", split.indices(label).len());
            }
            for (name, ok) in &split.checks {
                println!("check.{name}\t{}", if *ok { "pass" } else { "fail" });
            }
        }
        Command::Explain { ckpt, data, sample } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let dataset = Dataset::load(&data)?;
            print!("{}", explain(&ckpt, &dataset, &sample)?.to_text());
        }
        Command::KgQuery { ckpt, entity, tail_type, k } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            print!("{}", format_ranking(&explain_kg(&ckpt, &entity, tail_type, k)?));
        }
    }
    Ok(())
}
