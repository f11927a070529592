//! Trains every verifier variant on the planted synthetic corpus and reports
//! in-sample label accuracy, FEVER score and utility accuracy.
//!
//!     cargo run --release --example train_verifiers -- [epochs] [hidden]

use std::time::Instant;

use frame_verifier::models::{train, Variant};
use frame_verifier::pipeline::fit_metrics;
use frame_verifier::retrieval::{retrieve_pool, RetrievalOptions};
use frame_verifier::synth::{generate, SynthConfig};
use frame_verifier::TrainConfig;

fn main() -> frame_verifier::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let mut config = TrainConfig::default();
    config.epochs = args.next().unwrap_or(config.epochs);
    config.hidden = args.next().unwrap_or(config.hidden);

    let data = generate(&SynthConfig::default())?;
    let opts = RetrievalOptions::default();
    let pools = data
        .claims
        .iter()
        .map(|c| retrieve_pool(c, &data.corpus, &opts))
        .collect::<frame_verifier::Result<Vec<_>>>()?;

    for variant in [Variant::V1, Variant::V2, Variant::Mt, Variant::MtGumbel] {
        let start = Instant::now();
        let outcome = train(&data.claims, &pools, &data.table, &config, variant)?;
        let fit = fit_metrics(&outcome.params, &data.claims, &pools, &data.table, config.tau, config.seed)?;
        let last = outcome.history.last().expect("at least one epoch");
        println!(
            "{:<10} loss {:.4}/{:.4}  accuracy {:.3}  fever {:.3}  utility {}  ({:.1}s)",
            variant.as_str(),
            last.claim_loss,
            last.utility_loss,
            fit.label_accuracy,
            fit.fever_score,
            fit.utility_accuracy.map_or("-".to_string(), |u| format!("{u:.3}")),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
