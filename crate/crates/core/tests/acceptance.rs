//! Acceptance gate. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use frame_verifier::annotate::normalize_title;
use frame_verifier::corpus::{AnnotatedClaim, EvidenceKey, Label};
use frame_verifier::models::{EncodedInput, PassOptions, PredictionRecord, TrainingExample, Variant, VerifierParams};
use frame_verifier::neural::{grad_check, gumbel_softmax, sample_gumbel, softmax};
use frame_verifier::pipeline::{cmd_ablate, cmd_evaluate, cmd_predict, cmd_retrieve, cmd_train, fit_metrics, RunConfig};
use frame_verifier::retrieval::{hungarian_assign, retrieve_documents, retrieve_pool, retrieve_sentences, RetrievalOptions};
use frame_verifier::scoring::{aggregate, score_claim, RecallMode};
use frame_verifier::synth::{generate, saturating, SaturationConfig, SynthConfig};
use frame_verifier::{models, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {:.2}s, budget {:.0}s", t.as_secs_f64(), budget.as_secs_f64()))
}

// 1 -----------------------------------------------------------------------

fn brute_force_min(cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (cost.len(), cost[0].len());
    // assign every row of the smaller side to a distinct column of the larger
    let get = |r: usize, c: usize| if n <= m { cost[r][c] } else { cost[c][r] };
    let (small, large) = (n.min(m), n.max(m));
    fn rec(row: usize, small: usize, large: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64, get: &dyn Fn(usize, usize) -> f64) {
        if row == small {
            *best = best.min(acc);
            return;
        }
        for c in 0..large {
            if !used[c] {
                used[c] = true;
                rec(row + 1, small, large, used, acc + get(row, c), best, get);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, small, large, &mut vec![false; large], 0.0, &mut best, &get);
    best
}

fn hungarian_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rectangular = 0;
    for trial in 0..1000 {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        rectangular += usize::from(n != m);
        // integer costs make the comparison exact
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| f64::from(rng.gen_range(-20i32..=50))).collect())
            .collect();
        let got = hungarian_assign(&cost).map_err(|e| e.to_string())?;
        let want = brute_force_min(&cost);
        ensure(got.total_cost == want, || format!("trial {trial}: {} != brute force {want}", got.total_cost))?;
        let rows: BTreeSet<usize> = got.pairs.iter().map(|p| p.0).collect();
        let cols: BTreeSet<usize> = got.pairs.iter().map(|p| p.1).collect();
        ensure(rows.len() == n.min(m) && cols.len() == n.min(m), || format!("trial {trial}: not a matching"))?;
        let sum: f64 = got.pairs.iter().map(|&(r, c)| cost[r][c]).sum();
        ensure(sum == want, || format!("trial {trial}: pairs sum to {sum}"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("1000 matrices ({rectangular} rectangular) in {:.2}s", start.elapsed().as_secs_f64()))
}

// 2 -----------------------------------------------------------------------

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let (d, h, slots) = (6, 8, 3);
    let mut worst: f64 = 0.0;
    for variant in [Variant::V1, Variant::V2, Variant::Mt, Variant::MtGumbel] {
        for seed in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let mut params = VerifierParams::new(variant, d, h, &mut rng);
            let mut vec = |n: usize| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let input = EncodedInput::new(vec(d), (0..slots).map(|_| vec(d)).collect());
            let example = TrainingExample {
                input,
                label: Label::from_index(seed as usize % 3).unwrap(),
                utilities: Some(vec![1, 0, u8::from(seed % 2 == 0)]),
            };
            let noise: Vec<[f64; 2]> = (0..slots)
                .map(|_| {
                    let g = sample_gumbel(2, &mut rng);
                    [g[0], g[1]]
                })
                .collect();
            let theta = params.flat_params();
            let check = grad_check(
                |p| {
                    params.set_flat_params(p).expect("same shape");
                    let mut opts = PassOptions::eval(0.5, Some(&noise));
                    params.loss_and_gradient(&example, &mut opts, 1.0).expect("valid example")
                },
                &theta,
                1e-4,
            );
            ensure(check.max_rel_error < 1e-4, || {
                format!(
                    "{variant} seed {seed}: relative error {:.2e} at parameter {}",
                    check.max_rel_error, check.worst_index
                )
            })?;
            worst = worst.max(check.max_rel_error);
        }
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("v1, v2, mt, mt-gumbel x 3 seeds, max relative error {worst:.2e}"))
}

// 3 -----------------------------------------------------------------------

fn gumbel_statistics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_gap: f64 = 0.0;
    for v in 0..3 {
        let logits: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let target = softmax(&logits);
        let mut counts = [0usize; 3];
        let draws = 100_000;
        for _ in 0..draws {
            let s = gumbel_softmax(&logits, 1.0, &mut rng).map_err(|e| e.to_string())?;
            let arg = (0..3).max_by(|&a, &b| s.probs[a].total_cmp(&s.probs[b])).unwrap();
            counts[arg] += 1;
        }
        for k in 0..3 {
            let gap = (counts[k] as f64 / draws as f64 - target[k]).abs();
            worst_gap = worst_gap.max(gap);
            ensure(gap <= 0.02, || format!("vector {v} class {k}: frequency off by {gap:.4}"))?;
        }
    }
    let draws = 10_000;
    let mut sharp = 0;
    for _ in 0..draws {
        let s = gumbel_softmax(&[5.0, 0.0], 0.05, &mut rng).map_err(|e| e.to_string())?;
        sharp += usize::from(s.probs.iter().cloned().fold(0.0, f64::max) > 0.95);
    }
    let frac = sharp as f64 / draws as f64;
    ensure(frac >= 0.99, || format!("tau 0.05: max > 0.95 in only {frac:.4} of draws"))?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("max argmax-frequency gap {worst_gap:.4}; tau 0.05 near one-hot in {frac:.4}"))
}

// 4 -----------------------------------------------------------------------

fn key(d: &str, i: usize) -> EvidenceKey {
    (d.to_string(), i)
}

fn record(id: &str, label: Label, evidence: &[EvidenceKey]) -> PredictionRecord {
    PredictionRecord {
        claim_id: id.into(),
        predicted_label: label,
        predicted_evidence: evidence.to_vec(),
    }
}

fn gold(id: &str, label: Label, groups: Vec<Vec<EvidenceKey>>) -> AnnotatedClaim {
    let mut c = AnnotatedClaim::new(id, "claim");
    c.gold_label = Some(label);
    c.gold_evidence = Some(groups.into_iter().map(|g| g.into_iter().collect()).collect());
    c
}

fn truth_table() -> Result<(), String> {
    use Label::*;
    let groups = |c: &AnnotatedClaim| c.gold_evidence.clone().unwrap();
    let cases: Vec<(PredictionRecord, AnnotatedClaim, (bool, bool))> = vec![
        (record("a", Unsure, &[]), gold("a", Unsure, vec![]), (true, true)),
        (record("b", Supported, &[key("D", 2)]), gold("b", Supported, vec![vec![key("D", 1)]]), (true, false)),
        (
            record("c", Supported, &[key("E", 3)]),
            gold("c", Supported, vec![vec![key("D", 1)], vec![key("E", 3)]]),
            (true, true),
        ),
        // a group only counts when complete
        (
            record("d", Refuted, &[key("D", 1)]),
            gold("d", Refuted, vec![vec![key("D", 1), key("D", 2)]]),
            (true, false),
        ),
        (record("e", Supported, &[key("D", 1)]), gold("e", Refuted, vec![vec![key("D", 1)]]), (false, false)),
    ];
    for (p, g, want) in &cases {
        let s = score_claim(p, g.gold_label.unwrap(), &groups(g));
        ensure((s.label_correct, s.fever_correct) == *want, || {
            format!("claim {}: got {:?}", p.claim_id, (s.label_correct, s.fever_correct))
        })?;
    }

    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let g = vec![gold("x", Supported, vec![vec![key("D", 1)]])];
    let r = aggregate(&[record("x", Supported, &[key("D", 1)])], &g, RecallMode::Group).map_err(|e| e.to_string())?;
    ensure(
        r.fever_score == 1.0 && r.evidence_precision == 1.0 && r.evidence_recall == 1.0 && r.evidence_f1 == 1.0,
        || "perfect prediction not scored (1, 1, 1, 1)".into(),
    )?;
    let r = aggregate(&[record("x", Supported, &[])], &g, RecallMode::Group).map_err(|e| e.to_string())?;
    ensure(r.evidence_precision == 0.0 && r.evidence_recall == 0.0 && r.evidence_f1 == 0.0, || {
        "empty evidence not scored (0, 0, 0)".into()
    })?;
    let r = aggregate(&[record("x", Supported, &[key("D", 1), key("D", 9)])], &g, RecallMode::Group)
        .map_err(|e| e.to_string())?;
    ensure(
        close(r.evidence_precision, 0.5) && close(r.evidence_recall, 1.0) && close(r.evidence_f1, 2.0 / 3.0),
        || format!("pred {{a,b}} vs gold {{a}}: {:?}", (r.evidence_precision, r.evidence_recall, r.evidence_f1)),
    )?;
    let r = aggregate(&[record("x", Supported, &[key("Q", 4)])], &g, RecallMode::Group).map_err(|e| e.to_string())?;
    ensure(r.label_accuracy == 1.0 && r.fever_score == 0.0, || "criterion separation failed".into())?;
    let unsure = vec![gold("u1", Unsure, vec![]), gold("u2", Unsure, vec![])];
    let r = aggregate(
        &[record("u1", Unsure, &[key("Z", 0)]), record("u2", Unsure, &[])],
        &unsure,
        RecallMode::Group,
    )
    .map_err(|e| e.to_string())?;
    ensure(r.fever_score == 1.0, || "UNSURE-only dataset should score 1.0".into())?;
    let dup = aggregate(&[record("x", Supported, &[]), record("x", Refuted, &[])], &g, RecallMode::Group);
    ensure(dup.is_err(), || "duplicate prediction accepted".into())?;
    Ok(())
}

/// Group-enumeration scorer written against plain vectors.
fn oracle(preds: &[PredictionRecord], golds: &[AnnotatedClaim]) -> (f64, f64, f64, f64) {
    let (mut label_ok, mut fever_ok, mut hits, mut predicted, mut covered, mut scored) = (0, 0, 0, 0, 0, 0);
    for (p, g) in preds.iter().zip(golds) {
        let label = g.gold_label.unwrap();
        let groups: Vec<Vec<EvidenceKey>> = g
            .gold_evidence
            .clone()
            .unwrap()
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        let mut any_group = false;
        for group in &groups {
            let mut all = !group.is_empty();
            for k in group {
                all &= p.predicted_evidence.iter().any(|e| e == k);
            }
            any_group |= all;
        }
        let label_correct = p.predicted_label == label;
        label_ok += usize::from(label_correct);
        fever_ok += usize::from(label_correct && (label == Label::Unsure || any_group));
        if label != Label::Unsure {
            scored += 1;
            covered += usize::from(any_group);
            predicted += p.predicted_evidence.len();
            hits += p
                .predicted_evidence
                .iter()
                .filter(|e| groups.iter().any(|grp| grp.contains(e)))
                .count();
        }
    }
    let n = golds.len() as f64;
    let precision = if predicted == 0 { 0.0 } else { hits as f64 / predicted as f64 };
    let recall = if scored == 0 { 0.0 } else { covered as f64 / scored as f64 };
    (label_ok as f64 / n, fever_ok as f64 / n, precision, recall)
}

fn scorer_oracle() -> Outcome {
    let start = Instant::now();
    truth_table()?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let universe: Vec<EvidenceKey> = (0..3).flat_map(|d| (0..3).map(move |i| key(&format!("D{d}"), i))).collect();
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for c in 0..500 {
        let id = format!("c{c}");
        let label = Label::from_index(rng.gen_range(0..3)).unwrap();
        let groups = if label == Label::Unsure {
            vec![]
        } else {
            (0..rng.gen_range(1..=3))
                .map(|_| {
                    let size = rng.gen_range(1..=3);
                    let mut g: Vec<EvidenceKey> = Vec::new();
                    while g.len() < size {
                        let k = universe[rng.gen_range(0..universe.len())].clone();
                        if !g.contains(&k) {
                            g.push(k);
                        }
                    }
                    g
                })
                .collect()
        };
        let mut evidence: Vec<EvidenceKey> = universe.iter().filter(|_| rng.gen_bool(0.35)).cloned().collect();
        if rng.gen_bool(0.3) {
            // make a full group more likely to be covered
            if let Some(g) = groups.first() {
                evidence.extend(g.iter().filter(|k| !evidence.contains(k)).cloned().collect::<Vec<_>>());
            }
        }
        let predicted = if rng.gen_bool(0.7) { label } else { Label::from_index(rng.gen_range(0..3)).unwrap() };
        preds.push(record(&id, predicted, &evidence));
        golds.push(gold(&id, label, groups));
    }
    let r = aggregate(&preds, &golds, RecallMode::Group).map_err(|e| e.to_string())?;
    let (acc, fever, p, rec) = oracle(&preds, &golds);
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    ensure(
        close(r.label_accuracy, acc) && close(r.fever_score, fever) && close(r.evidence_precision, p) && close(r.evidence_recall, rec),
        || {
            format!(
                "scorer ({:.4}, {:.4}, {:.4}, {:.4}) vs oracle ({acc:.4}, {fever:.4}, {p:.4}, {rec:.4})",
                r.label_accuracy, r.fever_score, r.evidence_precision, r.evidence_recall
            )
        },
    )?;
    for (pred, g) in preds.iter().zip(&golds) {
        let s = score_claim(pred, g.gold_label.unwrap(), g.gold_evidence.as_deref().unwrap());
        let (a, f, _, _) = oracle(std::slice::from_ref(pred), std::slice::from_ref(g));
        ensure(s.label_correct == (a == 1.0) && s.fever_correct == (f == 1.0), || {
            format!("claim {} disagrees with oracle", pred.claim_id)
        })?;
    }
    Ok(format!(
        "truth table + 500 random claims agree (fever {fever:.3}, accuracy {acc:.3}) in {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

// 5 -----------------------------------------------------------------------

fn learnability() -> Outcome {
    let start = Instant::now();
    let data = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let labels: Vec<usize> = Label::ALL
        .iter()
        .map(|l| data.claims.iter().filter(|c| c.gold_label == Some(*l)).count())
        .collect();
    ensure(data.corpus.len() == 60 && data.claims.len() == 300 && labels == [100, 100, 100], || {
        format!("corpus shape {} docs, label counts {labels:?}", data.corpus.len())
    })?;
    let pools = data
        .claims
        .iter()
        .map(|c| retrieve_pool(c, &data.corpus, &RetrievalOptions::default()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let config = TrainConfig::default();
    ensure(
        (config.learning_rate, config.decay, config.momentum, config.l2, config.dropout, config.epochs)
            == (0.01, 1e-6, 0.9, 0.1, 0.5, 50),
        || format!("defaults drifted: {config:?}"),
    )?;
    let mut summary = Vec::new();
    for variant in [Variant::V1, Variant::V2, Variant::Mt, Variant::MtGumbel] {
        let outcome = models::train(&data.claims, &pools, &data.table, &config, variant).map_err(|e| e.to_string())?;
        let fit = fit_metrics(&outcome.params, &data.claims, &pools, &data.table, config.tau, config.seed)
            .map_err(|e| e.to_string())?;
        ensure(fit.label_accuracy >= 0.9 && fit.fever_score >= 0.75, || {
            format!("{variant}: accuracy {:.3}, fever {:.3}", fit.label_accuracy, fit.fever_score)
        })?;
        if variant.is_multitask() {
            let u = fit.utility_accuracy.unwrap_or(0.0);
            ensure(u >= 0.9, || format!("{variant}: utility accuracy {u:.3}"))?;
        }
        summary.push(format!(
            "{variant} {:.3}/{:.3}{}",
            fit.label_accuracy,
            fit.fever_score,
            fit.utility_accuracy.map_or(String::new(), |u| format!("/{u:.3}"))
        ));
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!("{} in {:.1}s", summary.join(", "), start.elapsed().as_secs_f64()))
}

// 6 -----------------------------------------------------------------------

fn retrieval_exactness() -> Outcome {
    let data = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let mut total = 0;
    for claim in &data.claims {
        let docs = retrieve_documents(claim, &data.corpus);
        let got: Vec<EvidenceKey> = retrieve_sentences(claim, &docs).iter().map(|c| c.key()).collect();
        let entities: BTreeSet<String> = claim.entities.iter().map(|e| normalize_title(e)).collect();
        let mut want = BTreeSet::new();
        for doc in data.corpus.documents() {
            if !entities.contains(&normalize_title(&doc.doc_id)) {
                continue;
            }
            for s in &doc.sentences {
                if s.frames.iter().any(|f| claim.frames.contains(f)) {
                    want.insert((doc.doc_id.clone(), s.index));
                }
            }
        }
        let got_set: BTreeSet<EvidenceKey> = got.iter().cloned().collect();
        ensure(got.len() == got_set.len() && got_set == want, || {
            format!("claim {}: retrieved {got_set:?}, full scan {want:?}", claim.claim_id)
        })?;
        total += want.len();
    }
    Ok(format!("{} claims, {total} frame sentences match the full scan", data.claims.len()))
}

// 7 -----------------------------------------------------------------------

fn run_pipeline(dir: &Path, files: &frame_verifier::synth::SynthFiles, variant: Variant, jobs: usize) -> Result<(), String> {
    let mut cfg = RunConfig::default();
    cfg.paths.corpus = Some(files.corpus.clone());
    cfg.paths.claims = Some(files.claims.clone());
    cfg.paths.embeddings = Some(files.embeddings.clone());
    cfg.paths.output_dir = dir.to_path_buf();
    cfg.model.variant = variant;
    cfg.model.embedding_dim = 16;
    cfg.train.epochs = 5;
    cfg.train.hidden = 16;
    cfg.train.seed = 11;
    cfg.jobs = jobs;
    cmd_retrieve(&cfg).map_err(|e| e.to_string())?;
    cmd_train(&cfg).map_err(|e| e.to_string())?;
    cmd_predict(&cfg).map_err(|e| e.to_string())?;
    cmd_evaluate(&cfg).map_err(|e| e.to_string())?;
    Ok(())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = generate(&SynthConfig::default())
        .and_then(|d| d.write(&tmp.path().join("data")))
        .map_err(|e| e.to_string())?;
    let outputs = ["pools.jsonl", "model.json", "loss.csv", "predictions.jsonl", "report.json"];
    for variant in [Variant::V1, Variant::V2, Variant::Mt, Variant::MtGumbel] {
        let a = tmp.path().join(format!("{variant}-a"));
        let b = tmp.path().join(format!("{variant}-b"));
        run_pipeline(&a, &files, variant, 1)?;
        run_pipeline(&b, &files, variant, 4)?;
        for name in outputs {
            let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
            ensure(!x.is_empty() && x == y, || format!("{variant}: {name} differs between runs"))?;
        }
    }
    Ok(format!("{} files identical across runs for all four variants (1 vs 4 workers)", outputs.len()))
}

// 8 -----------------------------------------------------------------------

fn ablation_direction() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_data = SaturationConfig::default();
    let files = saturating(&cfg_data)
        .and_then(|d| d.write(&tmp.path().join("data")))
        .map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::default();
    cfg.paths.corpus = Some(files.corpus.clone());
    cfg.paths.claims = Some(files.claims.clone());
    cfg.paths.embeddings = Some(files.embeddings.clone());
    cfg.paths.output_dir = tmp.path().to_path_buf();
    cfg.model.variant = Variant::V1;
    cfg.model.embedding_dim = cfg_data.dim;
    cfg.train.epochs = 3;
    cfg.train.hidden = 8;
    cfg.ablate.k_values = (1..=3 + cfg_data.distractors).collect();
    cfg.ablate.m_values = vec![0, 1];
    let rows = cmd_ablate(&cfg).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for m in &cfg.ablate.m_values {
        let series: Vec<_> = rows.iter().filter(|r| r.m == *m).collect();
        for w in series.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.k <= 3 {
                ensure(b.f1 >= a.f1, || format!("M={m}: F1 fell from {:.4} (K={}) to {:.4} (K={})", a.f1, a.k, b.f1, b.k))?;
            }
            if a.k >= 3 {
                ensure(b.precision <= a.precision, || {
                    format!("M={m}: precision rose from {:.4} (K={}) to {:.4} (K={})", a.precision, a.k, b.precision, b.k)
                })?;
            }
        }
        lines.push(format!(
            "M={m} F1 [{}] P [{}]",
            series.iter().map(|r| format!("{:.2}", r.f1)).collect::<Vec<_>>().join(" "),
            series.iter().map(|r| format!("{:.2}", r.precision)).collect::<Vec<_>>().join(" ")
        ));
    }
    Ok(lines.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("hungarian matches brute force", hungarian_oracle),
        ("gradient checks", gradient_checks),
        ("gumbel-softmax statistics", gumbel_statistics),
        ("FEVER scorer truth table and oracle", scorer_oracle),
        ("end-to-end learnability", learnability),
        ("retrieval exactness", retrieval_exactness),
        ("determinism", determinism),
        ("ablation direction", ablation_direction),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS  {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
