//! Loads a triple file, prints its summary, fits random embeddings and
//! ranks tails of one type for a head.
//!
//! cargo run --example kg_scoring -- crates/core/fixtures/complexes_kg.tsv P:PROT00 BP

use std::path::Path;

use kepla::kg::{format_ranking, nearest_entities, score_rotate, score_transe, EntityType, KgEmbeddings, KnowledgeGraph};
use kepla::kernel::ParamStore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [path, head, kind] = args.as_slice() else {
        anyhow::bail!("usage: kg_scoring <triples.tsv> <head id> <tail type>");
    };
    let kg = KnowledgeGraph::ingest_triples(Path::new(path))?;
    print!("{}", kg.summary().to_text());

    let dim = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut store = ParamStore::new();
    let emb = KgEmbeddings::new(&mut store, &kg, dim, &mut rng);
    let h: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let r = vec![1.0; dim];
    println!("rotate(h, 1, h) = {}", score_rotate(&h, &r, &h)?);
    println!("transe(h, 1, h) = {}", score_transe(&h, &r, &h)?);

    let kind: EntityType = kind.parse()?;
    let ranked = nearest_entities(&kg, &emb, &store, head, &h, kind, 5)?;
    print!("{}", format_ranking(&ranked));
    Ok(())
}
