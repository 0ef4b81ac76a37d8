//! Runs the random, cluster and cold split protocols on a dataset and
//! prints partition sizes and guarantee checks.
//!
//! cargo run --example split_protocols -- crates/core/fixtures/complexes.tsv 3

use std::path::Path;

use kepla::datasets::{split_by_protocol, Dataset, SplitLabel};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "crates/core/fixtures/complexes.tsv".into());
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse())?;
    let ds = Dataset::load(Path::new(&path))?;
    for protocol in ["random", "cluster", "cold"] {
        match split_by_protocol(&ds, protocol, seed) {
            Ok(split) => {
                let sizes: Vec<String> = SplitLabel::ALL
                    .iter()
                    .map(|&l| (l, split.indices(l).len()))
                    .filter(|&(_, n)| n > 0)
                    .map(|(l, n)| format!("{l}={n}"))
                    .collect();
                let unassigned = split.labels.iter().filter(|l| l.is_none()).count();
                println!("{protocol}: {} dropped={unassigned}", sizes.join(" "));
                for (name, ok) in &split.checks {
                    println!("  {name}: {}", if *ok { "pass" } else { "fail" });
                }
            }
            Err(e) => println!("{protocol}: {e}"),
        }
    }
    Ok(())
}
