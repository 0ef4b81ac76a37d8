//! Evaluates predictions against labels read from a two-column file
//! (`prediction<TAB>label`), or a built-in example when no file is given.
//!
//! cargo run --example metrics_report -- predictions.tsv

use kepla::metrics::evaluate;

fn main() -> anyhow::Result<()> {
    let (pred, labels): (Vec<f64>, Vec<f64>) = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| -> anyhow::Result<(f64, f64)> {
                let (a, b) = l.split_once('\t').ok_or_else(|| anyhow::anyhow!("expected two columns: {l}"))?;
                Ok((a.trim().parse()?, b.trim().parse()?))
            })
            .collect::<anyhow::Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        None => (vec![5.1, 6.3, 7.0, 4.2, 8.8], vec![5.0, 6.0, 7.5, 4.0, 9.1]),
    };
    let report = evaluate(&pred, &labels)?;
    print!("{}", report.to_text());
    println!("{}", report.to_json());
    Ok(())
}
