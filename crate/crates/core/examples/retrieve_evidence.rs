//! Evidence retrieval for one synthetic claim under each out-of-scope mapping
//! mode, followed by corpus-wide retrieval statistics.
//!
//!     cargo run --example retrieve_evidence

use frame_verifier::retrieval::{ir_stats, retrieve_pool, MapMode, RetrievalOptions};
use frame_verifier::synth::{generate, SynthConfig};

fn main() -> frame_verifier::Result<()> {
    let data = generate(&SynthConfig::default())?;
    let claim = &data.claims[0];
    println!("claim {}: {:?}", claim.claim_id, claim.text);
    println!("  frames {:?}, entities {:?}, gold {:?}", claim.frames, claim.entities, claim.gold_sentences());

    for map_mode in [MapMode::None, MapMode::MapAugment, MapMode::MapReplace] {
        let opts = RetrievalOptions {
            map_mode,
            ..RetrievalOptions::default()
        };
        let pool = retrieve_pool(claim, &data.corpus, &opts)?;
        println!("\n{map_mode:?} (K={}, M={})", pool.k, pool.m);
        for (slot, c) in pool.candidates.iter().enumerate() {
            if c.pad {
                println!("  {slot}: <pad>");
            } else {
                println!(
                    "  {slot}: {}#{} sim {:.3} in_scope {} useful {:?}",
                    c.doc_id, c.sentence_index, c.similarity, c.in_scope, c.utility_target
                );
            }
        }
    }

    let pools = data
        .claims
        .iter()
        .map(|c| retrieve_pool(c, &data.corpus, &RetrievalOptions::default()))
        .collect::<frame_verifier::Result<Vec<_>>>()?;
    let stats = ir_stats(&pools)?;
    println!(
        "\n{} claims: {:.2} documents and {:.2} sentences retrieved per claim",
        stats.claims, stats.avg_documents, stats.avg_sentences
    );
    Ok(())
}
