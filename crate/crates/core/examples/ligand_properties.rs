//! Prints descriptor counts for a SMILES string, or ligand–property KG
//! triples for every ligand of a dataset TSV.
//!
//! cargo run --example ligand_properties -- "CC(=O)Oc1ccccc1C(=O)O"
//! cargo run --example ligand_properties -- --triples crates/core/fixtures/complexes.tsv

use std::path::Path;

use anyhow::Context;
use kepla::chem::{extract_ligand_properties, parse_smiles, properties::ligand_triples};
use kepla::datasets::Dataset;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [flag, path] if flag == "--triples" => {
            let ds = Dataset::load(Path::new(path))?;
            for id in ds.ligand_ids() {
                let props = extract_ligand_properties(ds.graph(id).context("ligand graph")?);
                for line in ligand_triples(id, &props) {
                    println!("{line}");
                }
            }
        }
        [smiles] => {
            let graph = parse_smiles(smiles)?;
            let props = extract_ligand_properties(&graph);
            print!("{}", props.to_text());
            println!("features\t{}", props.features.join(","));
        }
        _ => anyhow::bail!("usage: ligand_properties <SMILES> | --triples <dataset.tsv>"),
    }
    Ok(())
}
