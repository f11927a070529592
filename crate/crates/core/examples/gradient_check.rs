//! Finite-difference check of the hand-derived gradients of every verifier.
//!
//!     cargo run --example gradient_check

use frame_verifier::models::{EncodedInput, PassOptions, TrainingExample, Variant, VerifierParams};
use frame_verifier::neural::{grad_check, sample_gumbel};
use frame_verifier::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let (dim, hidden, slots) = (6, 8, 3);
    for variant in [Variant::V1, Variant::V2, Variant::Mt, Variant::MtGumbel] {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let mut params = VerifierParams::new(variant, dim, hidden, &mut rng);
        let mut v = |n: usize| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let example = TrainingExample {
            input: EncodedInput::new(v(dim), (0..slots).map(|_| v(dim)).collect()),
            label: Label::Refuted,
            utilities: Some(vec![1, 0, 0]),
        };
        // frozen noise keeps the Gumbel model deterministic
        let noise: Vec<[f64; 2]> = (0..slots)
            .map(|_| {
                let g = sample_gumbel(2, &mut rng);
                [g[0], g[1]]
            })
            .collect();
        let theta = params.flat_params();
        let mut loss = |p: &[f64]| {
            params.set_flat_params(p).unwrap();
            params
                .loss_and_gradient(&example, &mut PassOptions::eval(0.5, Some(&noise)), 1.0)
                .unwrap()
        };
        // A large error at one step that vanishes at the other means a ReLU
        // input sits within a step of zero. Some seeds kill a whole hidden
        // layer; the zero-initialised biases above it then sit exactly on the
        // kink and disagree at every step.
        let coarse = grad_check(&mut loss, &theta, 1e-4);
        let fine = grad_check(&mut loss, &theta, 1e-6);
        println!(
            "{:<10} {:>4} parameters  max relative error {:.2e} (step 1e-4)  {:.2e} (step 1e-6)",
            variant.as_str(),
            coarse.checked,
            coarse.max_rel_error,
            fine.max_rel_error
        );
    }
}
