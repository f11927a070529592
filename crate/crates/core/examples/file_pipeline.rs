//! The staged file pipeline: retrieve, train, predict, evaluate. Writes a
//! synthetic corpus and every intermediate artifact to the given directory.
//!
//!     cargo run --release --example file_pipeline -- /tmp/fv-run [variant]

use std::path::PathBuf;

use frame_verifier::pipeline::{cmd_evaluate, cmd_predict, cmd_retrieve, cmd_train, RunConfig};
use frame_verifier::synth::{generate, SynthConfig};

fn main() -> frame_verifier::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("frame-verifier-run"));
    let variant = args.next().unwrap_or_else(|| "mt-gumbel".into()).parse()?;

    let synth = SynthConfig::default();
    let files = generate(&synth)?.write(&dir.join("data"))?;
    let mut cfg = RunConfig::default();
    cfg.paths.corpus = Some(files.corpus);
    cfg.paths.claims = Some(files.claims);
    cfg.paths.embeddings = Some(files.embeddings);
    cfg.paths.lexicon = Some(files.lexicon);
    cfg.paths.output_dir = dir.clone();
    cfg.model.variant = variant;
    cfg.model.embedding_dim = synth.dim;
    cfg.retrieval.utility_filter = variant.is_multitask();
    cfg.force = true;

    let stats = cmd_retrieve(&cfg)?;
    println!("retrieve: {:.2} documents, {:.2} sentences per claim", stats.avg_documents, stats.avg_sentences);
    let outcome = cmd_train(&cfg)?;
    let last = outcome.history.last().expect("epochs > 0");
    println!("train:    epoch {} claim loss {:.4} utility loss {:.4}", last.epoch, last.claim_loss, last.utility_loss);
    println!("predict:  {} predictions", cmd_predict(&cfg)?.len());
    print!("\n{}", cmd_evaluate(&cfg)?.to_table());
    println!("\nartifacts in {}", dir.display());
    Ok(())
}
