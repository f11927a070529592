//! Lexicon-driven frame triggering and title-gazetteer entity matching.
//!
//! This is a deterministic stand-in for a real frame-semantic parser and NER
//! tagger, so that corpora without precomputed annotations can still flow
//! through retrieval.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedClaim, Corpus};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_NGRAM: usize = 5;

/// Maps a lowercased trigger token to the frames it evokes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl FrameLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, trigger: &str, frame: impl Into<String>) -> Result<()> {
        if trigger.is_empty() || trigger.split_whitespace().count() != 1 {
            return Err(Error::argument(format!("trigger {trigger:?} must be a single token")));
        }
        self.entries
            .entry(trigger.to_lowercase())
            .or_default()
            .insert(frame.into());
        Ok(())
    }

    pub fn frames_for(&self, token: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads a JSON object `{trigger: [frame, ...]}`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                context: path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
        let mut lexicon = FrameLexicon::new();
        for (trigger, frames) in raw {
            if frames.is_empty() {
                return Err(Error::Validation(format!("trigger {trigger:?} has no frames")));
            }
            for frame in frames {
                lexicon.insert(&trigger, frame)?;
            }
        }
        Ok(lexicon)
    }
}

/// Union of the lexicon frames of every token.
pub fn annotate_frames(tokens: &[String], lexicon: &FrameLexicon) -> BTreeSet<String> {
    tokens
        .iter()
        .filter_map(|t| lexicon.frames_for(&t.to_lowercase()))
        .flatten()
        .cloned()
        .collect()
}

/// Normalized page-title form: lowercase, spaces as underscores, any trailing
/// parenthetical (`Paris_(film)`) removed.
pub fn normalize_title(title: &str) -> String {
    let mut t = title.trim().to_lowercase().replace(' ', "_");
    if t.ends_with(')') {
        if let Some(open) = t.rfind('(') {
            t.truncate(open);
        }
    }
    t.trim_end_matches('_').to_string()
}

/// Normalized title → canonical document ids sharing that form.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    titles: BTreeMap<String, BTreeSet<String>>,
}

impl Gazetteer {
    pub fn from_titles<'a>(titles: impl IntoIterator<Item = &'a str>) -> Self {
        let mut g = Gazetteer::default();
        for title in titles {
            g.titles
                .entry(normalize_title(title))
                .or_default()
                .insert(title.to_string());
        }
        g
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::from_titles(corpus.doc_ids())
    }

    pub fn lookup(&self, normalized: &str) -> Option<&BTreeSet<String>> {
        self.titles.get(normalized)
    }
}

/// Every contiguous n-gram (n ≤ `max_n`) whose normalized form equals a
/// document title, reported as the canonical doc id.
pub fn annotate_entities(tokens: &[String], titles: &Gazetteer, max_n: usize) -> BTreeSet<String> {
    let mut found = BTreeSet::new();
    for start in 0..tokens.len() {
        for n in 1..=max_n.min(tokens.len() - start) {
            let gram = tokens[start..start + n].join("_");
            if let Some(ids) = titles.lookup(&normalize_title(&gram)) {
                found.extend(ids.iter().cloned());
            }
        }
    }
    found
}

/// Fills empty `frames` / `entities` on a claim using the fallback annotator.
pub fn annotate_claim(claim: &mut AnnotatedClaim, lexicon: &FrameLexicon, titles: &Gazetteer, max_n: usize) {
    if claim.frames.is_empty() {
        claim.frames = annotate_frames(&claim.tokens, lexicon);
    }
    if claim.entities.is_empty() {
        claim.entities = annotate_entities(&claim.tokens, titles, max_n);
    }
}

/// Fills empty sentence frame sets across a corpus.
pub fn annotate_corpus(corpus: &Corpus, lexicon: &FrameLexicon) -> Result<Corpus> {
    let docs = corpus.documents().cloned().map(|mut doc| {
        for s in &mut doc.sentences {
            if s.frames.is_empty() {
                s.frames = annotate_frames(&s.tokens, lexicon);
            }
        }
        doc
    });
    Corpus::from_documents(docs)
}
