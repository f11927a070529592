//! Stratified 5-fold cross-validation of the multi-task verifier through the
//! file pipeline.
//!
//!     cargo run --release --example kfold_cv

use frame_verifier::models::Variant;
use frame_verifier::pipeline::{cmd_kfold, cmd_retrieve, RunConfig};
use frame_verifier::synth::{generate, SynthConfig};

fn main() -> frame_verifier::Result<()> {
    let dir = std::env::temp_dir().join(format!("frame-verifier-kfold-{}", std::process::id()));
    let synth = SynthConfig::default();
    let files = generate(&synth)?.write(&dir)?;

    let mut cfg = RunConfig::default();
    cfg.paths.corpus = Some(files.corpus);
    cfg.paths.claims = Some(files.claims);
    cfg.paths.embeddings = Some(files.embeddings);
    cfg.paths.output_dir = dir.clone();
    cfg.model.variant = Variant::Mt;
    cfg.model.embedding_dim = synth.dim;
    cfg.kfold.stratified = true;
    cfg.retrieval.utility_filter = true;
    cfg.force = true;

    cmd_retrieve(&cfg)?;
    for r in cmd_kfold(&cfg)? {
        println!(
            "fold {:>4}  train {:>3}  test {:>3}  accuracy {:.3}  fever {:.3}  f1 {:.3}",
            r.fold, r.train_claims, r.test_claims, r.label_accuracy, r.fever_score, r.f1
        );
    }
    Ok(())
}
