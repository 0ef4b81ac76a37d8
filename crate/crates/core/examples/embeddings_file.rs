//! Writes a per-residue embedding file for the fixture proteins, then
//! trains a model whose protein provider reads from that file.
//!
//! cargo run --release --example embeddings_file

use std::path::PathBuf;

use kepla::datasets::{random_split, Dataset};
use kepla::encoders::{load_index, EmbeddingStore};
use kepla::kernel::Tensor;
use kepla::kg::KnowledgeGraph;
use kepla::pipeline::{train, ProviderMode, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let ds = Dataset::load(&dir.join("complexes.tsv"))?;
    let dim = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut store = EmbeddingStore::new(dim);
    for s in ds.samples() {
        if store.get(&s.protein_id).is_none() {
            store.insert(s.protein_id.clone(), Tensor::uniform(dim, s.sequence.len(), 1.0, &mut rng))?;
        }
    }
    let path = std::env::temp_dir().join("kepla-example.emb");
    store.save(&path)?;
    for entry in load_index(&path)? {
        println!("{}\toffset {}\t{} residues", entry.id, entry.offset, entry.len);
    }

    let mut config = RunConfig::parse(&std::fs::read_to_string(dir.join("small.conf"))?)?;
    config.provider = ProviderMode::File(path);
    config.epochs = 5;
    let kg = KnowledgeGraph::ingest_triples(&dir.join("complexes_kg.tsv"))?;
    let out = train(config, &ds, &random_split(&ds, &[0.8, 0.1, 0.1], 0)?, kg)?;
    print!("{}", out.log_text());
    Ok(())
}
