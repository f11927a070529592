//! File-level pipeline stages: retrieve, train, predict, evaluate, ablate and
//! k-fold. Each stage reads its inputs from the paths in a [`RunConfig`],
//! checks every input and output path before doing any work, and refuses to
//! overwrite existing outputs unless `force` is set.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{annotate_claim, annotate_corpus, FrameLexicon, Gazetteer, DEFAULT_MAX_NGRAM};
use crate::corpus::{kfold_split, load_claims, load_corpus, read_jsonl, stratified_kfold_split, write_jsonl, AnnotatedClaim, Corpus};
use crate::embed::{EmbeddingTable, OovPolicy};
use crate::error::{Error, Result};
use crate::models::{predict, train, utility_targets, Checkpoint, UTILITY_THRESHOLD, EvidenceMode, PredictionRecord, TrainOutcome, Variant, VerifierParams};
use crate::neural::TrainConfig;
use crate::retrieval::{ir_stats, load_pools, retrieve_pool, save_pools, EvidencePool, IrStats, MapMode, RetrievalOptions, Sampling};
use crate::scoring::{aggregate, RecallMode, ScoreReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub claims: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// Default location for every output not named explicitly.
    pub output_dir: PathBuf,
    pub pools: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub loss_log: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub ablation: Option<PathBuf>,
    pub kfold: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: None,
            claims: None,
            embeddings: None,
            lexicon: None,
            output_dir: PathBuf::from("."),
            pools: None,
            checkpoint: None,
            loss_log: None,
            predictions: None,
            report: None,
            ablation: None,
            kfold: None,
        }
    }
}

impl PathsConfig {
    fn output(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.output_dir.join(name))
    }

    pub fn pools_path(&self) -> PathBuf {
        self.output(&self.pools, "pools.jsonl")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.output(&self.checkpoint, "model.json")
    }

    pub fn loss_log_path(&self) -> PathBuf {
        self.output(&self.loss_log, "loss.csv")
    }

    pub fn predictions_path(&self) -> PathBuf {
        self.output(&self.predictions, "predictions.jsonl")
    }

    pub fn report_path(&self) -> PathBuf {
        self.output(&self.report, "report.json")
    }

    pub fn ablation_path(&self) -> PathBuf {
        self.output(&self.ablation, "ablation.csv")
    }

    pub fn kfold_path(&self) -> PathBuf {
        self.output(&self.kfold, "kfold.csv")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub embedding_dim: usize,
    pub oov: OovPolicy,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Mt,
            embedding_dim: 50,
            oov: OovPolicy::Zero,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub map_mode: MapMode,
    /// Random pool sampling with this seed instead of top-K.
    pub sample_seed: Option<u64>,
    /// Report only evidence the utility head marks as useful.
    pub utility_filter: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub recall_mode: RecallMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    pub k_values: Vec<usize>,
    pub m_values: Vec<usize>,
    /// Evaluate this model in every cell instead of retraining per cell.
    pub checkpoint: Option<PathBuf>,
}

impl Default for AblateConfig {
    fn default() -> Self {
        AblateConfig {
            k_values: vec![1, 2, 3, 4, 5],
            m_values: vec![0, 1, 2],
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KfoldConfig {
    pub folds: usize,
    pub stratified: bool,
}

impl Default for KfoldConfig {
    fn default() -> Self {
        KfoldConfig {
            folds: 5,
            stratified: false,
        }
    }
}

/// Everything a pipeline stage needs. Loaded from TOML with one table per
/// field; command-line flags override individual values afterwards.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub retrieval: RetrievalConfig,
    pub scoring: ScoringConfig,
    pub ablate: AblateConfig,
    pub kfold: KfoldConfig,
    /// Overwrite existing outputs.
    pub force: bool,
    /// Worker threads for retrieval and prediction; 0 lets rayon decide.
    pub jobs: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn retrieval_options(&self) -> RetrievalOptions {
        RetrievalOptions {
            k: self.train.k,
            m: self.train.m,
            map_mode: self.retrieval.map_mode,
            sampling: match self.retrieval.sample_seed {
                Some(seed) => Sampling::Random { seed },
                None => Sampling::TopK,
            },
        }
    }

    pub fn evidence_mode(&self) -> EvidenceMode {
        if self.retrieval.utility_filter {
            EvidenceMode::UtilityFiltered
        } else {
            EvidenceMode::Raw
        }
    }

    fn input(&self, path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        let path = path
            .clone()
            .ok_or_else(|| Error::argument(format!("no {what} path configured")))?;
        require_file(&path)?;
        Ok(path)
    }

    fn check_outputs(&self, outputs: &[&Path]) -> Result<()> {
        for out in outputs {
            if out.exists() && !self.force {
                return Err(Error::OutputExists(out.to_path_buf()));
            }
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        Ok(())
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::argument(format!("worker pool: {e}")))
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

struct Inputs {
    corpus: Corpus,
    claims: Vec<AnnotatedClaim>,
}

/// Loads corpus and claims, filling missing annotations from the lexicon
/// when one is configured.
fn load_inputs(corpus_path: &Path, claims_path: &Path, lexicon: Option<&Path>) -> Result<Inputs> {
    let mut corpus = load_corpus(corpus_path)?;
    let mut claims = load_claims(claims_path)?;
    if let Some(lex_path) = lexicon {
        let lexicon = FrameLexicon::load(lex_path)?;
        corpus = annotate_corpus(&corpus, &lexicon)?;
        let titles = Gazetteer::from_corpus(&corpus);
        for c in &mut claims {
            annotate_claim(c, &lexicon, &titles, DEFAULT_MAX_NGRAM);
        }
    }
    Ok(Inputs { corpus, claims })
}

fn load_table(path: &Path, model: &ModelConfig) -> Result<EmbeddingTable> {
    Ok(EmbeddingTable::load(path, model.embedding_dim)?.with_oov(model.oov))
}

fn retrieve_all(
    claims: &[AnnotatedClaim],
    corpus: &Corpus,
    opts: &RetrievalOptions,
    workers: &rayon::ThreadPool,
) -> Result<Vec<EvidencePool>> {
    workers.install(|| claims.par_iter().map(|c| retrieve_pool(c, corpus, opts)).collect())
}

fn predict_all(
    params: &VerifierParams,
    claims: &[AnnotatedClaim],
    pools: &[EvidencePool],
    table: &EmbeddingTable,
    cfg: &RunConfig,
    workers: &rayon::ThreadPool,
) -> Result<Vec<PredictionRecord>> {
    let by_id = crate::retrieval::index_pools(pools)?;
    let missing: Vec<&str> = claims
        .iter()
        .map(|c| c.claim_id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!("no evidence pool for claims: {}", missing.join(", "))));
    }
    let mode = cfg.evidence_mode();
    workers.install(|| {
        claims
            .par_iter()
            .map(|c| {
                let pred = predict(params, c, by_id[c.claim_id.as_str()], table, mode, cfg.train.tau, cfg.train.seed)?;
                Ok(PredictionRecord::from(&pred))
            })
            .collect()
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Retrieves one evidence pool per claim and writes them as JSONL.
pub fn cmd_retrieve(cfg: &RunConfig) -> Result<IrStats> {
    let corpus_path = cfg.input(&cfg.paths.corpus, "corpus")?;
    let claims_path = cfg.input(&cfg.paths.claims, "claims")?;
    let lexicon = cfg.paths.lexicon.as_ref().map(|p| require_file(p).map(|_| p.as_path())).transpose()?;
    let out = cfg.paths.pools_path();
    cfg.check_outputs(&[&out])?;
    let opts = cfg.retrieval_options();
    if opts.k + opts.m == 0 {
        return Err(Error::argument("k + m must be at least 1"));
    }

    let inputs = load_inputs(&corpus_path, &claims_path, lexicon)?;
    let pools = retrieve_all(&inputs.claims, &inputs.corpus, &opts, &cfg.thread_pool()?)?;
    save_pools(&out, &pools)?;
    if pools.is_empty() {
        return Ok(IrStats {
            claims: 0,
            avg_documents: 0.0,
            avg_sentences: 0.0,
        });
    }
    ir_stats(&pools)
}

/// Trains the configured variant on the retrieved pools; writes the
/// checkpoint and a per-epoch loss log.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.train.validate()?;
    let corpus_path = cfg.input(&cfg.paths.corpus, "corpus")?;
    let claims_path = cfg.input(&cfg.paths.claims, "claims")?;
    let emb_path = cfg.input(&cfg.paths.embeddings, "embeddings")?;
    let pools_path = cfg.paths.pools_path();
    require_file(&pools_path)?;
    let (ckpt, log) = (cfg.paths.checkpoint_path(), cfg.paths.loss_log_path());
    cfg.check_outputs(&[&ckpt, &log])?;

    let corpus = load_corpus(&corpus_path)?;
    let claims = load_claims(&claims_path)?;
    let pools = load_pools(&pools_path, &corpus)?;
    let table = load_table(&emb_path, &cfg.model)?;
    let outcome = train(&claims, &pools, &table, &cfg.train, cfg.model.variant)?;
    Checkpoint::from_params(&outcome.params, &cfg.train).save(&ckpt)?;
    write_csv(&log, &outcome.history)?;
    Ok(outcome)
}

/// Predicts a label and evidence for every claim; writes prediction JSONL.
pub fn cmd_predict(cfg: &RunConfig) -> Result<Vec<PredictionRecord>> {
    let corpus_path = cfg.input(&cfg.paths.corpus, "corpus")?;
    let claims_path = cfg.input(&cfg.paths.claims, "claims")?;
    let emb_path = cfg.input(&cfg.paths.embeddings, "embeddings")?;
    let ckpt_path = cfg.paths.checkpoint_path();
    let pools_path = cfg.paths.pools_path();
    require_file(&ckpt_path)?;
    require_file(&pools_path)?;
    let out = cfg.paths.predictions_path();
    cfg.check_outputs(&[&out])?;

    let params = Checkpoint::load(&ckpt_path)?.to_params()?;
    let corpus = load_corpus(&corpus_path)?;
    let claims = load_claims(&claims_path)?;
    let pools = load_pools(&pools_path, &corpus)?;
    let table = load_table(&emb_path, &cfg.model)?;
    let preds = predict_all(&params, &claims, &pools, &table, cfg, &cfg.thread_pool()?)?;
    write_jsonl(&out, &preds)?;
    Ok(preds)
}

/// Scores the predictions file against the gold claims; writes a JSON report.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<ScoreReport> {
    let claims_path = cfg.input(&cfg.paths.claims, "claims")?;
    let preds_path = cfg.paths.predictions_path();
    require_file(&preds_path)?;
    let out = cfg.paths.report_path();
    cfg.check_outputs(&[&out])?;

    let golds = load_claims(&claims_path)?;
    let preds: Vec<PredictionRecord> = read_jsonl(&preds_path)?;
    let report = aggregate(&preds, &golds, cfg.scoring.recall_mode)?;
    write_json(&out, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub k: usize,
    pub m: usize,
    pub label_accuracy: f64,
    pub fever_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Runs retrieval, training (unless a checkpoint is configured) and scoring
/// for every (K, M) cell. Models are trained and scored on the same claims.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    let grid = &cfg.ablate;
    if grid.k_values.is_empty() || grid.m_values.is_empty() {
        return Err(Error::argument("ablation grid needs at least one K and one M value"));
    }
    if grid.k_values.contains(&0) && grid.m_values.contains(&0) {
        return Err(Error::argument("ablation cell K = M = 0 is empty"));
    }
    let corpus_path = cfg.input(&cfg.paths.corpus, "corpus")?;
    let claims_path = cfg.input(&cfg.paths.claims, "claims")?;
    let emb_path = cfg.input(&cfg.paths.embeddings, "embeddings")?;
    let lexicon = cfg.paths.lexicon.as_ref().map(|p| require_file(p).map(|_| p.as_path())).transpose()?;
    let fixed = grid.checkpoint.as_ref().map(|p| require_file(p).map(|_| p)).transpose()?;
    let out = cfg.paths.ablation_path();
    cfg.check_outputs(&[&out])?;

    let inputs = load_inputs(&corpus_path, &claims_path, lexicon)?;
    let table = load_table(&emb_path, &cfg.model)?;
    let fixed = fixed.map(|p| Checkpoint::load(p)?.to_params()).transpose()?;
    let workers = cfg.thread_pool()?;
    let mut rows = Vec::new();
    for &k in &grid.k_values {
        for &m in &grid.m_values {
            let mut cell = cfg.clone();
            cell.train.k = k;
            cell.train.m = m;
            let pools = retrieve_all(&inputs.claims, &inputs.corpus, &cell.retrieval_options(), &workers)?;
            let params = match &fixed {
                Some(p) => p.clone(),
                None => train(&inputs.claims, &pools, &table, &cell.train, cell.model.variant)?.params,
            };
            let preds = predict_all(&params, &inputs.claims, &pools, &table, &cell, &workers)?;
            let report = aggregate(&preds, &inputs.claims, cfg.scoring.recall_mode)?;
            rows.push(AblationRow {
                k,
                m,
                label_accuracy: report.label_accuracy,
                fever_score: report.fever_score,
                precision: report.evidence_precision,
                recall: report.evidence_recall,
                f1: report.evidence_f1,
            });
        }
    }
    write_csv(&out, &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    /// Fold number from 1, or `mean` for the summary row.
    pub fold: String,
    pub train_claims: usize,
    pub test_claims: usize,
    pub label_accuracy: f64,
    pub fever_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Cross-validation over the claims file using previously retrieved pools.
/// The last row of the output is the mean over folds.
pub fn cmd_kfold(cfg: &RunConfig) -> Result<Vec<FoldRow>> {
    cfg.train.validate()?;
    let corpus_path = cfg.input(&cfg.paths.corpus, "corpus")?;
    let claims_path = cfg.input(&cfg.paths.claims, "claims")?;
    let emb_path = cfg.input(&cfg.paths.embeddings, "embeddings")?;
    let pools_path = cfg.paths.pools_path();
    require_file(&pools_path)?;
    let out = cfg.paths.kfold_path();
    cfg.check_outputs(&[&out])?;

    let corpus = load_corpus(&corpus_path)?;
    let claims = load_claims(&claims_path)?;
    let pools = load_pools(&pools_path, &corpus)?;
    let table = load_table(&emb_path, &cfg.model)?;
    let folds = if cfg.kfold.stratified {
        stratified_kfold_split(&claims, cfg.kfold.folds, cfg.train.seed)?
    } else {
        kfold_split(&claims, cfg.kfold.folds, cfg.train.seed)?
    };
    let workers = cfg.thread_pool()?;
    let mut rows = Vec::new();
    for (i, fold) in folds.iter().enumerate() {
        let pick = |idx: &[usize]| idx.iter().map(|&j| claims[j].clone()).collect::<Vec<_>>();
        let (train_set, test_set) = (pick(&fold.train), pick(&fold.test));
        let outcome = train(&train_set, &pools, &table, &cfg.train, cfg.model.variant)?;
        let preds = predict_all(&outcome.params, &test_set, &pools, &table, cfg, &workers)?;
        let r = aggregate(&preds, &test_set, cfg.scoring.recall_mode)?;
        rows.push(FoldRow {
            fold: (i + 1).to_string(),
            train_claims: train_set.len(),
            test_claims: test_set.len(),
            label_accuracy: r.label_accuracy,
            fever_score: r.fever_score,
            precision: r.evidence_precision,
            recall: r.evidence_recall,
            f1: r.evidence_f1,
        });
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&FoldRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let summary = FoldRow {
        fold: "mean".into(),
        train_claims: rows.iter().map(|r| r.train_claims).sum::<usize>() / rows.len(),
        test_claims: rows.iter().map(|r| r.test_claims).sum::<usize>() / rows.len(),
        label_accuracy: mean(|r| r.label_accuracy),
        fever_score: mean(|r| r.fever_score),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
    };
    rows.push(summary);
    write_csv(&out, &rows)?;
    Ok(rows)
}

/// In-sample quality of a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub label_accuracy: f64,
    pub fever_score: f64,
    /// Fraction of non-padding slots whose thresholded utility matches the
    /// gold target; multi-task models only.
    pub utility_accuracy: Option<f64>,
}

pub fn fit_metrics(
    params: &VerifierParams,
    claims: &[AnnotatedClaim],
    pools: &[EvidencePool],
    table: &EmbeddingTable,
    tau: f64,
    seed: u64,
) -> Result<FitMetrics> {
    let by_id = crate::retrieval::index_pools(pools)?;
    let mut records = Vec::with_capacity(claims.len());
    let (mut hits, mut slots) = (0usize, 0usize);
    for claim in claims {
        let pool = by_id
            .get(claim.claim_id.as_str())
            .ok_or_else(|| Error::Validation(format!("no evidence pool for claim {:?}", claim.claim_id)))?;
        let pred = predict(params, claim, pool, table, EvidenceMode::Raw, tau, seed)?;
        if let Some(u) = &pred.utilities {
            let targets = utility_targets(claim, pool);
            for (i, c) in pool.candidates.iter().enumerate() {
                if !c.pad {
                    slots += 1;
                    hits += usize::from(u8::from(u[i] > UTILITY_THRESHOLD) == targets[i]);
                }
            }
        }
        records.push(PredictionRecord::from(&pred));
    }
    let report = aggregate(&records, claims, RecallMode::Group)?;
    Ok(FitMetrics {
        label_accuracy: report.label_accuracy,
        fever_score: report.fever_score,
        utility_accuracy: params.variant.is_multitask().then(|| hits as f64 / slots.max(1) as f64),
    })
}
