//! Minimum-cost assignment, and mapping out-of-scope sentences onto in-scope
//! ones by token Jaccard.
//!
//!     cargo run --example hungarian_mapping

use std::collections::BTreeSet;

use frame_verifier::retrieval::{hungarian_assign, map_out_of_scope, EvidenceCandidate};
use frame_verifier::AnnotatedSentence;

fn sentence(index: usize, text: &str, in_scope: bool) -> AnnotatedSentence {
    AnnotatedSentence {
        doc_id: "Example".into(),
        index,
        text: text.into(),
        tokens: text.split_whitespace().map(String::from).collect(),
        frames: BTreeSet::new(),
        in_scope,
    }
}

fn main() -> frame_verifier::Result<()> {
    let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
    let a = hungarian_assign(&cost)?;
    println!("square: pairs {:?}, cost {}", a.pairs, a.total_cost);

    let wide = vec![vec![7.0, 2.0, 9.0, 1.0], vec![3.0, 8.0, 4.0, 6.0]];
    let a = hungarian_assign(&wide)?;
    println!("2x4:    pairs {:?}, cost {}", a.pairs, a.total_cost);

    let scope = [
        sentence(0, "the film was released in 1999", true),
        sentence(1, "it was directed by a newcomer", true),
    ];
    let outside: Vec<EvidenceCandidate> = [
        sentence(7, "a newcomer directed the film", false),
        sentence(9, "the film premiered in 1999 to acclaim", false),
    ]
    .iter()
    .map(|s| EvidenceCandidate::from_sentence(s, 1.0))
    .collect();
    for m in map_out_of_scope(&outside, &scope) {
        println!(
            "{:?}\n  -> {:?} (jaccard {:.3})",
            outside[m.frame].tokens.join(" "),
            scope[m.scope].text,
            m.similarity
        );
    }
    Ok(())
}
