//! K x M ablation over a corpus whose gold groups have three sentences that
//! outrank every distractor. F1 rises until K = 3; precision falls after.
//!
//!     cargo run --release --example ablation_grid

use frame_verifier::models::Variant;
use frame_verifier::pipeline::{cmd_ablate, RunConfig};
use frame_verifier::synth::{saturating, SaturationConfig};

fn main() -> frame_verifier::Result<()> {
    let dir = std::env::temp_dir().join(format!("frame-verifier-ablation-{}", std::process::id()));
    let synth = SaturationConfig::default();
    let files = saturating(&synth)?.write(&dir)?;

    let mut cfg = RunConfig::default();
    cfg.paths.corpus = Some(files.corpus);
    cfg.paths.claims = Some(files.claims);
    cfg.paths.embeddings = Some(files.embeddings);
    cfg.paths.output_dir = dir.clone();
    cfg.model.variant = Variant::Mt;
    cfg.model.embedding_dim = synth.dim;
    cfg.train.hidden = 16;
    cfg.ablate.k_values = vec![1, 2, 3, 4, 5, 6];
    cfg.ablate.m_values = vec![0, 1, 2];
    cfg.force = true;

    println!("{:>2} {:>2} {:>8} {:>8} {:>9} {:>8} {:>8}", "K", "M", "accuracy", "fever", "precision", "recall", "f1");
    for r in cmd_ablate(&cfg)? {
        println!(
            "{:>2} {:>2} {:>8.3} {:>8.3} {:>9.3} {:>8.3} {:>8.3}",
            r.k, r.m, r.label_accuracy, r.fever_score, r.precision, r.recall, r.f1
        );
    }
    println!("\ngrid written to {}", cfg.paths.ablation_path().display());
    Ok(())
}
