//! Command-line front end over `frame_verifier::pipeline`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frame_verifier::embed::OovPolicy;
use frame_verifier::models::Variant;
use frame_verifier::pipeline::{self, RunConfig};
use frame_verifier::retrieval::MapMode;
use frame_verifier::scoring::RecallMode;
use frame_verifier::Error;

#[derive(Parser)]
#[command(name = "frame-verifier", version, about = "Frame-based evidence retrieval and claim verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Retrieve an evidence pool for every claim.
    Retrieve(Common),
    /// Train a verifier on retrieved pools.
    Train(Common),
    /// Predict labels and evidence.
    Predict(Common),
    /// Score predictions against gold claims.
    Evaluate(Common),
    /// Sweep K x M and report accuracy, FEVER score and evidence P/R/F1.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        k_values: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        m_values: Option<Vec<usize>>,
        /// Evaluate this checkpoint in every cell instead of retraining.
        #[arg(long)]
        eval_checkpoint: Option<PathBuf>,
    },
    /// Cross-validate over the claims file.
    Kfold {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        stratified: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    claims: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    pools: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(short = 'k', long)]
    k: Option<usize>,
    #[arg(short = 'm', long)]
    m: Option<usize>,
    #[arg(long)]
    map_mode: Option<MapMode>,
    #[arg(long)]
    utility_filter: bool,
    /// Recall counts claims whose evidence covers a whole gold group (default).
    #[arg(long, conflicts_with = "sentence_recall")]
    strict_recall: bool,
    /// Recall pools gold sentences instead.
    #[arg(long)]
    sentence_recall: bool,
    /// Out-of-vocabulary tokens: zero (counted in the mean) or skip.
    #[arg(long)]
    oov: Option<OovPolicy>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn resolve(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let p = &mut cfg.paths;
        macro_rules! set {
            ($($field:expr => $value:expr),* $(,)?) => {
                $(if let Some(v) = $value { $field = v; })*
            };
        }
        set!(
            p.corpus => self.corpus.map(Some),
            p.claims => self.claims.map(Some),
            p.embeddings => self.embeddings.map(Some),
            p.lexicon => self.lexicon.map(Some),
            p.output_dir => self.output_dir,
            p.pools => self.pools.map(Some),
            p.checkpoint => self.checkpoint.map(Some),
            p.predictions => self.predictions.map(Some),
            p.report => self.report.map(Some),
        );
        set!(
            cfg.model.variant => self.variant,
            cfg.model.embedding_dim => self.embedding_dim,
            cfg.train.epochs => self.epochs,
            cfg.train.hidden => self.hidden,
            cfg.train.seed => self.seed,
            cfg.train.tau => self.tau,
            cfg.train.k => self.k,
            cfg.train.m => self.m,
            cfg.retrieval.map_mode => self.map_mode,
            cfg.model.oov => self.oov,
            cfg.jobs => self.jobs,
        );
        cfg.retrieval.utility_filter |= self.utility_filter;
        cfg.force |= self.force;
        if self.strict_recall {
            cfg.scoring.recall_mode = RecallMode::Group;
        }
        if self.sentence_recall {
            cfg.scoring.recall_mode = RecallMode::Sentence;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Retrieve(c) => {
            let stats = pipeline::cmd_retrieve(&c.resolve()?)?;
            eprintln!(
                "retrieved {} claims: {:.3} documents, {:.3} sentences per claim",
                stats.claims, stats.avg_documents, stats.avg_sentences
            );
        }
        Command::Train(c) => {
            let outcome = pipeline::cmd_train(&c.resolve()?)?;
            for e in &outcome.history {
                eprintln!("epoch {:>4}  claim {:.5}  utility {:.5}", e.epoch, e.claim_loss, e.utility_loss);
            }
        }
        Command::Predict(c) => {
            let preds = pipeline::cmd_predict(&c.resolve()?)?;
            eprintln!("wrote {} predictions", preds.len());
        }
        Command::Evaluate(c) => {
            let report = pipeline::cmd_evaluate(&c.resolve()?)?;
            print!("{}", report.to_table());
        }
        Command::Ablate {
            common,
            k_values,
            m_values,
            eval_checkpoint,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(k) = k_values {
                cfg.ablate.k_values = k;
            }
            if let Some(m) = m_values {
                cfg.ablate.m_values = m;
            }
            if eval_checkpoint.is_some() {
                cfg.ablate.checkpoint = eval_checkpoint;
            }
            for r in pipeline::cmd_ablate(&cfg)? {
                eprintln!(
                    "K={} M={}  acc {:.4}  fever {:.4}  P {:.4}  R {:.4}  F1 {:.4}",
                    r.k, r.m, r.label_accuracy, r.fever_score, r.precision, r.recall, r.f1
                );
            }
        }
        Command::Kfold {
            common,
            folds,
            stratified,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(f) = folds {
                cfg.kfold.folds = f;
            }
            cfg.kfold.stratified |= stratified;
            for r in pipeline::cmd_kfold(&cfg)? {
                eprintln!(
                    "fold {:>4}  acc {:.4}  fever {:.4}  F1 {:.4}",
                    r.fold, r.label_accuracy, r.fever_score, r.f1
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
