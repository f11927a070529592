//! Label accuracy, evidence precision/recall/F1 and FEVER score.
//!
//! A claim is FEVER-correct when its label is right and, for SUPPORTED and
//! REFUTED claims, the predicted evidence contains at least one complete gold
//! evidence group. UNSURE claims only need the right label and take no part in
//! the evidence metrics.
//!
//! Evidence metrics are micro-averaged: precision pools predicted sentences
//! over all claims against the union of each claim's gold sentences. Recall
//! is either the fraction of claims covering a whole gold group (`Group`, the
//! default) or pooled per-sentence recall (`Sentence`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedClaim, EvidenceKey, Label};
use crate::error::{Error, Result};
use crate::models::PredictionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecallMode {
    #[default]
    Group,
    Sentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClaimScore {
    pub label_correct: bool,
    pub fever_correct: bool,
}

fn covers_group(predicted: &BTreeSet<&EvidenceKey>, groups: &[BTreeSet<EvidenceKey>]) -> bool {
    groups
        .iter()
        .any(|g| !g.is_empty() && g.iter().all(|k| predicted.contains(k)))
}

pub fn score_claim(pred: &PredictionRecord, gold_label: Label, gold_groups: &[BTreeSet<EvidenceKey>]) -> ClaimScore {
    let label_correct = pred.predicted_label == gold_label;
    let fever_correct = match gold_label {
        Label::Unsure => label_correct,
        Label::Supported | Label::Refuted => {
            label_correct && covers_group(&pred.predicted_evidence.iter().collect(), gold_groups)
        }
    };
    ClaimScore {
        label_correct,
        fever_correct,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Evidence precision/recall/F1 over non-UNSURE gold claims. A gold claim
/// without a prediction counts as predicting no evidence.
pub fn evidence_prf(preds: &[PredictionRecord], golds: &[AnnotatedClaim], mode: RecallMode) -> Prf {
    let by_id: BTreeMap<&str, &PredictionRecord> = preds.iter().map(|p| (p.claim_id.as_str(), p)).collect();
    let (mut hits, mut predicted, mut covered, mut claims, mut gold_total, mut gold_hits) = (0usize, 0usize, 0usize, 0usize, 0usize, 0usize);
    for gold in golds {
        if matches!(gold.gold_label, None | Some(Label::Unsure)) {
            continue;
        }
        claims += 1;
        let groups = gold.gold_evidence.as_deref().unwrap_or(&[]);
        let union = gold.gold_sentences();
        let evidence: BTreeSet<&EvidenceKey> = by_id
            .get(gold.claim_id.as_str())
            .map(|p| p.predicted_evidence.iter().collect())
            .unwrap_or_default();
        predicted += evidence.len();
        hits += evidence.iter().filter(|k| union.contains(**k)).count();
        gold_total += union.len();
        gold_hits += union.iter().filter(|k| evidence.contains(k)).count();
        covered += usize::from(covers_group(&evidence, groups));
    }
    let precision = ratio(hits as f64, predicted as f64);
    let recall = match mode {
        RecallMode::Group => ratio(covered as f64, claims as f64),
        RecallMode::Sentence => ratio(gold_hits as f64, gold_total as f64),
    };
    Prf {
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

pub const MISSING: &str = "MISSING";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub claims: usize,
    pub fever_score: f64,
    pub label_accuracy: f64,
    pub evidence_precision: f64,
    pub evidence_recall: f64,
    pub evidence_f1: f64,
    pub averaging: String,
    pub recall_mode: RecallMode,
    pub missing_predictions: usize,
    /// gold label → predicted label (or `MISSING`) → count.
    pub per_label_counts: BTreeMap<String, BTreeMap<String, usize>>,
}

impl ScoreReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "claims              {}", self.claims);
        let _ = writeln!(s, "FEVER score         {:.4}", self.fever_score);
        let _ = writeln!(s, "label accuracy      {:.4}", self.label_accuracy);
        let _ = writeln!(s, "evidence precision  {:.4} ({})", self.evidence_precision, self.averaging);
        let _ = writeln!(s, "evidence recall     {:.4} ({:?})", self.evidence_recall, self.recall_mode);
        let _ = writeln!(s, "evidence F1         {:.4}", self.evidence_f1);
        let cols: Vec<&str> = Label::ALL.iter().map(|l| l.as_str()).chain([MISSING]).collect();
        let _ = writeln!(s, "\n{:<10} {}", "gold\\pred", cols.iter().map(|c| format!("{c:>10}")).collect::<String>());
        for gold in Label::ALL {
            let row = self.per_label_counts.get(gold.as_str());
            let cells: String = cols
                .iter()
                .map(|c| format!("{:>10}", row.and_then(|r| r.get(*c)).copied().unwrap_or(0)))
                .collect();
            let _ = writeln!(s, "{:<10} {cells}", gold.as_str());
        }
        s
    }
}

/// Scores predictions against labeled gold claims. Every prediction must
/// refer to a gold claim and appear at most once.
pub fn aggregate(preds: &[PredictionRecord], golds: &[AnnotatedClaim], mode: RecallMode) -> Result<ScoreReport> {
    let mut by_id: BTreeMap<&str, &PredictionRecord> = BTreeMap::new();
    for p in preds {
        if by_id.insert(p.claim_id.as_str(), p).is_some() {
            return Err(Error::Validation(format!("duplicate prediction for claim {:?}", p.claim_id)));
        }
    }
    let gold_ids: BTreeSet<&str> = golds.iter().map(|g| g.claim_id.as_str()).collect();
    let unknown: Vec<&str> = by_id.keys().filter(|id| !gold_ids.contains(*id)).copied().collect();
    if !unknown.is_empty() {
        return Err(Error::Validation(format!("predictions for unknown claims: {}", unknown.join(", "))));
    }
    let unlabeled: Vec<&str> = golds
        .iter()
        .filter(|g| g.gold_label.is_none())
        .map(|g| g.claim_id.as_str())
        .collect();
    if !unlabeled.is_empty() {
        return Err(Error::Validation(format!("gold claims without labels: {}", unlabeled.join(", "))));
    }

    let mut label_ok = 0usize;
    let mut fever_ok = 0usize;
    let mut missing = 0usize;
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for gold in golds {
        let label = gold.gold_label.expect("checked above");
        let predicted = match by_id.get(gold.claim_id.as_str()) {
            Some(p) => {
                let s = score_claim(p, label, gold.gold_evidence.as_deref().unwrap_or(&[]));
                label_ok += usize::from(s.label_correct);
                fever_ok += usize::from(s.fever_correct);
                p.predicted_label.as_str()
            }
            None => {
                missing += 1;
                MISSING
            }
        };
        *counts
            .entry(label.as_str().to_string())
            .or_default()
            .entry(predicted.to_string())
            .or_default() += 1;
    }
    let n = golds.len() as f64;
    let prf = evidence_prf(preds, golds, mode);
    Ok(ScoreReport {
        claims: golds.len(),
        fever_score: ratio(fever_ok as f64, n),
        label_accuracy: ratio(label_ok as f64, n),
        evidence_precision: prf.precision,
        evidence_recall: prf.recall,
        evidence_f1: prf.f1,
        averaging: "micro".into(),
        recall_mode: mode,
        missing_predictions: missing,
        per_label_counts: counts,
    })
}
