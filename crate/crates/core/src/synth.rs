//! Planted synthetic corpora.
//!
//! [`generate`] builds a corpus where every document has three neutral
//! in-scope lead sentences followed by out-of-scope body sentences: two
//! "supporting" sentences, two "refuting" ones and a neutral one. Each
//! non-neutral sentence has its own frame; two of the lead sentences share a
//! per-document generic frame. A SUPPORTED or REFUTED claim evokes the frame
//! of one body sentence (its single gold evidence) plus the generic frame;
//! an UNSURE claim evokes a frame the document lacks. Supporting and refuting
//! sentences contain cue words whose embeddings sit on dedicated axes, so the
//! retrieved evidence determines the label.
//!
//! [`saturating`] builds a corpus for retrieval ablations in which every claim
//! has one gold group of `gold_size` sentences that outrank all distractors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::annotate::FrameLexicon;
use crate::corpus::{save_claims, save_corpus, AnnotatedClaim, AnnotatedDocument, AnnotatedSentence, Corpus, Label};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};

const SUPPORT_WORDS: [&str; 6] = ["confirmed", "indeed", "verified", "true", "affirmed", "correct"];
const REFUTE_WORDS: [&str; 6] = ["denied", "never", "false", "disproved", "not", "wrong"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub documents: usize,
    pub claims: usize,
    pub dim: usize,
    /// Frames available for body sentences; must be at least 5 + 1.
    pub frames: usize,
    /// Neutral filler vocabulary size.
    pub filler: usize,
    /// Magnitude of the cue-word axis.
    pub cue_strength: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 60,
            claims: 300,
            dim: 16,
            frames: 30,
            filler: 200,
            cue_strength: 12.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub corpus: Corpus,
    pub claims: Vec<AnnotatedClaim>,
    pub table: EmbeddingTable,
    pub lexicon: FrameLexicon,
}

/// Paths written by [`SynthData::write`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub corpus: PathBuf,
    pub claims: PathBuf,
    pub embeddings: PathBuf,
    pub lexicon: PathBuf,
}

impl SynthData {
    pub fn write(&self, dir: &Path) -> Result<SynthFiles> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SynthFiles {
            corpus: dir.join("corpus.jsonl"),
            claims: dir.join("claims.jsonl"),
            embeddings: dir.join("vectors.txt"),
            lexicon: dir.join("lexicon.json"),
        };
        save_corpus(&files.corpus, &self.corpus)?;
        save_claims(&files.claims, &self.claims)?;
        self.table.save(&files.embeddings)?;
        let lex = serde_json::to_string_pretty(&self.lexicon).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(&files.lexicon, lex).map_err(|e| Error::io(&files.lexicon, e))?;
        Ok(files)
    }
}

struct Vocab {
    rng: ChaCha8Rng,
    filler: Vec<String>,
}

impl Vocab {
    fn fillers(&mut self, n: usize) -> Vec<String> {
        (0..n)
            .map(|_| self.filler[self.rng.gen_range(0..self.filler.len())].clone())
            .collect()
    }
}

fn frame_name(i: usize) -> String {
    format!("Frame_{i:02}")
}

fn generic_name(i: usize) -> String {
    format!("Generic_{i:02}")
}

fn trigger(frame: &str) -> String {
    format!("trig_{}", frame.to_lowercase())
}

fn entity_token(doc: usize) -> String {
    format!("entity_{doc:02}")
}

fn doc_id(doc: usize) -> String {
    format!("Entity_{doc:02}")
}

fn make_sentence(doc: &str, index: usize, tokens: Vec<String>, frames: &[String], in_scope: bool) -> AnnotatedSentence {
    AnnotatedSentence {
        doc_id: doc.to_string(),
        index,
        text: tokens.join(" "),
        tokens,
        frames: frames.iter().cloned().collect(),
        in_scope,
    }
}

fn build_table(
    dim: usize,
    cue: f64,
    words: impl IntoIterator<Item = String>,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddingTable> {
    if dim < 3 {
        return Err(Error::argument("synthetic embeddings need at least 3 dimensions"));
    }
    let noise = Normal::new(0.0, 0.5).expect("valid std");
    let cue_noise = Normal::new(0.0, 0.05).expect("valid std");
    let mut table = EmbeddingTable::new(dim);
    let words: BTreeSet<String> = words.into_iter().collect();
    for w in words {
        let mut v: Vec<f64> = (0..dim)
            .map(|i| if i < 2 { cue_noise.sample(rng) } else { noise.sample(rng) })
            .collect();
        if SUPPORT_WORDS.contains(&w.as_str()) {
            v[0] += cue;
        } else if REFUTE_WORDS.contains(&w.as_str()) {
            v[1] += cue;
        }
        table.insert(w, v)?;
    }
    Ok(table)
}

/// Label-informative corpus; see the module docs for its structure.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.documents == 0 || cfg.claims == 0 {
        return Err(Error::argument("need at least one document and one claim"));
    }
    if cfg.frames < 6 {
        return Err(Error::argument("need at least 6 frames"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vocab = Vocab {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed),
        filler: (0..cfg.filler).map(|i| format!("w{i:03}")).collect(),
    };
    let generics = 6;

    // per document: frames of the two supporting and two refuting sentences
    let mut docs = Vec::with_capacity(cfg.documents);
    let mut doc_frames: Vec<(Vec<(usize, String)>, Vec<(usize, String)>, BTreeSet<String>)> = Vec::new();
    for d in 0..cfg.documents {
        let id = doc_id(d);
        let ent = entity_token(d);
        let generic = generic_name(d % generics);
        let mut pool: Vec<usize> = (0..cfg.frames).collect();
        pool.shuffle(&mut rng);
        let body_frames: Vec<String> = pool[..5].iter().map(|&f| frame_name(f)).collect();

        let mut sentences = Vec::new();
        let lead = |v: &mut Vocab, extra: Option<&str>| {
            let mut t = vec![ent.clone()];
            if let Some(fr) = extra {
                t.push(trigger(fr));
            }
            t.extend(v.fillers(5));
            t
        };
        sentences.push(make_sentence(&id, 0, lead(&mut vocab, None), &[], true));
        for i in 1..3 {
            sentences.push(make_sentence(&id, i, lead(&mut vocab, Some(&generic)), std::slice::from_ref(&generic), true));
        }

        // body order: 0,1 supporting; 2,3 refuting; 4 neutral
        let mut kinds: Vec<usize> = (0..5).collect();
        kinds.shuffle(&mut rng);
        let mut supports = Vec::new();
        let mut refutes = Vec::new();
        for (offset, &kind) in kinds.iter().enumerate() {
            let index = 3 + offset;
            let frame = &body_frames[kind];
            let mut tokens = vec![ent.clone(), trigger(frame)];
            match kind {
                0 | 1 => {
                    tokens.extend(SUPPORT_WORDS.choose_multiple(&mut rng, 3).map(|w| w.to_string()));
                    supports.push((index, frame.clone()));
                }
                2 | 3 => {
                    tokens.extend(REFUTE_WORDS.choose_multiple(&mut rng, 3).map(|w| w.to_string()));
                    refutes.push((index, frame.clone()));
                }
                _ => {}
            }
            tokens.extend(vocab.fillers(3));
            sentences.push(make_sentence(&id, index, tokens, std::slice::from_ref(frame), false));
        }
        docs.push(AnnotatedDocument {
            doc_id: id,
            sentences,
        });
        doc_frames.push((supports, refutes, body_frames.into_iter().collect()));
    }

    let mut labels: Vec<Label> = (0..cfg.claims).map(|i| Label::ALL[i % 3]).collect();
    labels.shuffle(&mut rng);
    let mut claims = Vec::with_capacity(cfg.claims);
    for (c, label) in labels.into_iter().enumerate() {
        let d = rng.gen_range(0..cfg.documents);
        let (supports, refutes, present) = &doc_frames[d];
        let generic = generic_name(d % generics);
        let (frame, gold) = match label {
            Label::Supported | Label::Refuted => {
                let list = if label == Label::Supported { supports } else { refutes };
                let (index, frame) = list.choose(&mut rng).expect("two per document").clone();
                (frame, Some((doc_id(d), index)))
            }
            Label::Unsure => {
                let absent: Vec<usize> = (0..cfg.frames).filter(|f| !present.contains(&frame_name(*f))).collect();
                (frame_name(*absent.choose(&mut rng).expect("frames exceed body size")), None)
            }
        };
        let mut tokens = vec![entity_token(d), trigger(&frame), trigger(&generic)];
        tokens.extend(vocab.fillers(3));
        let mut claim = AnnotatedClaim::new(format!("claim-{c:04}"), tokens.join(" "));
        claim.tokens = tokens;
        claim.frames = [frame, generic].into_iter().collect();
        claim.entities = [doc_id(d)].into_iter().collect();
        claim.gold_label = Some(label);
        claim.gold_evidence = Some(match gold {
            Some(key) => vec![[key].into_iter().collect()],
            None => Vec::new(),
        });
        claims.push(claim);
    }

    let mut lexicon = FrameLexicon::new();
    for f in (0..cfg.frames).map(frame_name).chain((0..generics).map(generic_name)) {
        lexicon.insert(&trigger(&f), f.clone())?;
    }
    let words = vocab
        .filler
        .iter()
        .cloned()
        .chain(SUPPORT_WORDS.iter().chain(&REFUTE_WORDS).map(|w| w.to_string()))
        .chain((0..cfg.documents).map(entity_token))
        .chain((0..cfg.frames).map(|f| trigger(&frame_name(f))))
        .chain((0..generics).map(|g| trigger(&generic_name(g))));
    let table = build_table(cfg.dim, cfg.cue_strength, words, &mut rng)?;

    Ok(SynthData {
        corpus: Corpus::from_documents(docs)?,
        claims,
        table,
        lexicon,
    })
}

#[derive(Debug, Clone)]
pub struct SaturationConfig {
    pub claims: usize,
    /// Sentences per gold group; all of them outrank every distractor.
    pub gold_size: usize,
    /// Lower-ranked frame-matching sentences per claim.
    pub distractors: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        SaturationConfig {
            claims: 24,
            gold_size: 3,
            distractors: 3,
            dim: 8,
            seed: 3,
        }
    }
}

/// One document per claim. Gold sentences carry both claim frames (frame
/// Jaccard 1); distractors carry only the shared one (Jaccard 1/2). Claims
/// alternate SUPPORTED / REFUTED and gold sentences carry matching cue words.
pub fn saturating(cfg: &SaturationConfig) -> Result<SynthData> {
    if cfg.claims == 0 || cfg.gold_size == 0 {
        return Err(Error::argument("need at least one claim and one gold sentence"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vocab = Vocab {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed),
        filler: (0..50).map(|i| format!("w{i:03}")).collect(),
    };
    let shared = "Shared".to_string();
    let mut docs = Vec::new();
    let mut claims = Vec::new();
    let mut lexicon = FrameLexicon::new();
    lexicon.insert(&trigger(&shared), shared.clone())?;
    for c in 0..cfg.claims {
        let id = doc_id(c);
        let ent = entity_token(c);
        let topic = frame_name(c);
        lexicon.insert(&trigger(&topic), topic.clone())?;
        let label = if c % 2 == 0 { Label::Supported } else { Label::Refuted };
        let cues = if label == Label::Supported { &SUPPORT_WORDS } else { &REFUTE_WORDS };

        let mut sentences = vec![make_sentence(&id, 0, vec![ent.clone(), "w000".into()], &[], true)];
        let mut gold = BTreeSet::new();
        for g in 0..cfg.gold_size {
            let index = sentences.len();
            let mut tokens = vec![ent.clone(), trigger(&topic), cues[g % cues.len()].to_string()];
            tokens.extend(vocab.fillers(3));
            sentences.push(make_sentence(&id, index, tokens, &[topic.clone(), shared.clone()], false));
            gold.insert((id.clone(), index));
        }
        for _ in 0..cfg.distractors {
            let index = sentences.len();
            let mut tokens = vec![ent.clone(), trigger(&shared)];
            tokens.extend(vocab.fillers(4));
            sentences.push(make_sentence(&id, index, tokens, std::slice::from_ref(&shared), false));
        }
        docs.push(AnnotatedDocument {
            doc_id: id.clone(),
            sentences,
        });

        let tokens = vec![ent.clone(), trigger(&topic), trigger(&shared)];
        let mut claim = AnnotatedClaim::new(format!("claim-{c:04}"), tokens.join(" "));
        claim.tokens = tokens;
        claim.frames = [topic, shared.clone()].into_iter().collect();
        claim.entities = [id].into_iter().collect();
        claim.gold_label = Some(label);
        claim.gold_evidence = Some(vec![gold]);
        claims.push(claim);
    }
    let words = vocab
        .filler
        .iter()
        .cloned()
        .chain(SUPPORT_WORDS.iter().chain(&REFUTE_WORDS).map(|w| w.to_string()))
        .chain((0..cfg.claims).map(entity_token))
        .chain((0..cfg.claims).map(|c| trigger(&frame_name(c))))
        .chain([trigger(&shared)]);
    let table = build_table(cfg.dim, 4.0, words, &mut rng)?;
    Ok(SynthData {
        corpus: Corpus::from_documents(docs)?,
        claims,
        table,
        lexicon,
    })
}
