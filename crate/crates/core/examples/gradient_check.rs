//! Finite-difference check of the full training loss of a tiny model with
//! two protein and two ligand triples, for every fusion mode.
//!
//! cargo run --release --example gradient_check

use kepla::chem::parse_smiles;
use kepla::fusion::FusionMode;
use kepla::kernel::gradcheck;
use kepla::kg::KnowledgeGraph;
use kepla::pipeline::{Model, PairInput, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let kg = KnowledgeGraph::parse(
        "P:p1\tinvolved_in\tBP:1\nP:p1\tenables\tMF:1\nL:l1\tnum_donors\tMD:num_donors=2\nL:l1\thas_feature\tCF:donor\n",
    )?;
    let graph = parse_smiles("CC(N)CO")?;
    let seq = "MKTAYIAKQRQISFVKSHFSRQLEERL";
    let inputs = [PairInput { protein_id: "p1", sequence: seq, ligand_id: "l1", graph: &graph }];
    for mode in [FusionMode::Cross, FusionMode::ProteinAttn, FusionMode::LigandAttn, FusionMode::Concat] {
        let cfg = RunConfig::parse(&format!(
            "dim = 4\nprovider_dim = 4\nprotein_hidden = 4\nligand_layers = 2\ndecoder_hidden = 8\nbeta = 0.5\nfusion = {}\n",
            mode.as_str()
        ))?;
        let model = Model::new(cfg, kg.clone())?;
        let report = gradcheck::check(&model.store, 1e-5, |tape, store| {
            let mut m = model.clone();
            m.store = store.clone();
            m.batch_loss(tape, &inputs, &[6.0], &mut ChaCha8Rng::seed_from_u64(0)).map(|b| b.loss)
        })?;
        println!(
            "{:<13} {} entries, max relative error {:.3e} at {:?}",
            mode.as_str(),
            report.checked,
            report.max_rel_err,
            report.worst
        );
    }
    Ok(())
}
