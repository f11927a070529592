//! Claim verification over frame-annotated corpora.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`corpus`] / [`annotate`]: load line-delimited JSON documents and claims,
//!    optionally filling in frames and entity mentions with a lexicon-driven
//!    fallback annotator.
//! 2. [`retrieval`]: entity-to-title document retrieval, frame-overlap sentence
//!    retrieval, Jaccard + Hungarian mapping of out-of-scope evidence onto
//!    in-scope sentences, and fixed-size evidence pools.
//! 3. [`models`]: three verifier networks built on [`neural`] and [`embed`]:
//!    a plain MLP, a multi-task model with a shared evidence encoder and a
//!    per-sentence utility head, and a multi-task model that reweights evidence
//!    representations with Gumbel-Softmax utilities.
//! 4. [`scoring`]: label accuracy, evidence precision/recall/F1 and FEVER score.
//!
//! [`pipeline`] wires the stages together over files; [`synth`] generates
//! small planted corpora for experiments and tests.

pub mod annotate;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod models;
pub mod neural;
pub mod pipeline;
pub mod retrieval;
pub mod scoring;
pub mod synth;

pub use corpus::{AnnotatedClaim, AnnotatedDocument, AnnotatedSentence, Corpus, EvidenceKey, Label};
pub use error::{Error, Result};
pub use models::{Prediction, Variant, VerifierParams};
pub use neural::TrainConfig;
pub use retrieval::{EvidenceCandidate, EvidencePool};
pub use scoring::ScoreReport;
