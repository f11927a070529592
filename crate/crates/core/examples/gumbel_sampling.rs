//! Gumbel-Softmax samples at several temperatures: argmax frequencies follow
//! softmax(logits), and low temperatures give near one-hot samples.
//!
//!     cargo run --release --example gumbel_sampling

use frame_verifier::neural::{gumbel_softmax, softmax};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> frame_verifier::Result<()> {
    let logits = [1.0, 0.0, -0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!("softmax(logits) = {:.3?}", softmax(&logits));

    for tau in [5.0, 1.0, 0.5, 0.1, 0.05] {
        let draws = 20_000;
        let mut counts = [0usize; 3];
        let mut peak = 0.0;
        for _ in 0..draws {
            let s = gumbel_softmax(&logits, tau, &mut rng)?;
            let (arg, max) = s
                .probs
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::MIN), |best, (i, p)| if p > best.1 { (i, p) } else { best });
            counts[arg] += 1;
            peak += max;
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
        println!("tau {tau:<5} argmax frequency {freq:.3?}  mean max component {:.3}", peak / draws as f64);
    }
    Ok(())
}
