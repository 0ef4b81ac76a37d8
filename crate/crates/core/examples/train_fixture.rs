//! Trains the small configuration on the bundled fixture, evaluates the
//! best checkpoint and prints the attention explanation of one sample.
//!
//! cargo run --release --example train_fixture

use std::path::PathBuf;

use kepla::datasets::{random_split, Dataset};
use kepla::kg::{EntityType, KnowledgeGraph};
use kepla::pipeline::{evaluate_checkpoint, explain, explain_kg, train, RunConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn main() -> anyhow::Result<()> {
    let config = RunConfig::parse(&std::fs::read_to_string(fixture("small.conf"))?)?;
    let ds = Dataset::load(&fixture("complexes.tsv"))?;
    let mut kg = KnowledgeGraph::ingest_triples(&fixture("complexes_kg.tsv"))?;
    kg.load_names(&std::fs::read_to_string(fixture("complexes_kg.names"))?)?;
    let split = random_split(&ds, &[0.8, 0.1, 0.1], 0)?;

    let out = train(config, &ds, &split, kg)?;
    print!("{}", out.log_text());
    println!("best epoch {} val_rmse {:.4}", out.best.epoch, out.best.val_rmse);

    let report = evaluate_checkpoint(&out.best, &ds, &split)?;
    print!("{}", report.to_text());

    let sample = ds.sample(0);
    print!("{}", explain(&out.best, &ds, &sample.id)?.to_text());
    for r in explain_kg(&out.best, &format!("P:{}", sample.protein_id), EntityType::MF, 3)? {
        println!("{}\t{}\t{:.4}", r.entity_id, r.entity_name, r.score);
    }
    Ok(())
}
