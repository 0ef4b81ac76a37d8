//! Parses a SMILES string and prints atoms, bonds, ring count and the
//! ECFP4 bits of the resulting graph.
//!
//! cargo run --example smiles_graph -- "c1ccccc1C(=O)N"

use kepla::chem::{morgan_fingerprint, parse_smiles, DEFAULT_FP_BITS, DEFAULT_FP_RADIUS};

fn main() -> anyhow::Result<()> {
    let smiles = std::env::args().nth(1).unwrap_or_else(|| "CC(=O)Oc1ccccc1C(=O)O".into());
    let graph = parse_smiles(&smiles)?;
    println!("{smiles}: {} atoms, {} bonds, {} rings", graph.atom_count(), graph.bond_count(), graph.cyclomatic_number());
    for i in 0..graph.atom_count() {
        let a = graph.atom(i);
        println!("atom {i}\t{}\tdegree {}\tH {}\tring {}", a.element.symbol(), graph.degree(i), graph.total_hs(i), graph.atom_in_ring(i));
    }
    for b in graph.bonds() {
        println!("bond {}-{}\t{:?}", b.a, b.b, b.order);
    }
    let fp = morgan_fingerprint(&graph, DEFAULT_FP_RADIUS, DEFAULT_FP_BITS)?;
    let bits: Vec<String> = fp.on_bits().map(|b| b.to_string()).collect();
    println!("ecfp4 ({} bits on): {}", fp.count_ones(), bits.join(" "));
    Ok(())
}
