//! FEVER scoring of a handful of predictions, with the report table.
//!
//!     cargo run --example score_predictions

use frame_verifier::models::PredictionRecord;
use frame_verifier::scoring::{aggregate, score_claim, RecallMode};
use frame_verifier::{AnnotatedClaim, EvidenceKey, Label};

fn key(doc: &str, i: usize) -> EvidenceKey {
    (doc.to_string(), i)
}

fn gold(id: &str, label: Label, groups: Vec<Vec<EvidenceKey>>) -> AnnotatedClaim {
    let mut c = AnnotatedClaim::new(id, "");
    c.gold_label = Some(label);
    c.gold_evidence = Some(groups.into_iter().map(|g| g.into_iter().collect()).collect());
    c
}

fn pred(id: &str, label: Label, evidence: Vec<EvidenceKey>) -> PredictionRecord {
    PredictionRecord {
        claim_id: id.into(),
        predicted_label: label,
        predicted_evidence: evidence,
    }
}

fn main() -> frame_verifier::Result<()> {
    let golds = vec![
        gold("1", Label::Supported, vec![vec![key("Paris", 0)], vec![key("France", 2)]]),
        gold("2", Label::Refuted, vec![vec![key("Nile", 1), key("Egypt", 4)]]),
        gold("3", Label::Unsure, vec![]),
        gold("4", Label::Supported, vec![vec![key("Moon", 3)]]),
    ];
    let preds = vec![
        pred("1", Label::Supported, vec![key("France", 2), key("France", 5)]),
        // one sentence short of the only gold group
        pred("2", Label::Refuted, vec![key("Nile", 1)]),
        pred("3", Label::Unsure, vec![]),
        pred("4", Label::Refuted, vec![key("Moon", 3)]),
    ];
    for (p, g) in preds.iter().zip(&golds) {
        let s = score_claim(p, g.gold_label.unwrap(), g.gold_evidence.as_deref().unwrap());
        println!("claim {}: label {} fever {}", p.claim_id, s.label_correct, s.fever_correct);
    }
    println!();
    for mode in [RecallMode::Group, RecallMode::Sentence] {
        println!("{}", aggregate(&preds, &golds, mode)?.to_table());
    }
    Ok(())
}
