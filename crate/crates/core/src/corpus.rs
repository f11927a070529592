//! Documents, claims and labels, plus line-delimited JSON loading.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A `(doc_id, sentence index)` pair identifying one sentence of the corpus.
pub type EvidenceKey = (String, usize);

/// Verdict for a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Supported,
    Refuted,
    Unsure,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Supported, Label::Refuted, Label::Unsure];

    pub fn index(self) -> usize {
        match self {
            Label::Supported => 0,
            Label::Refuted => 1,
            Label::Unsure => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Supported => "SUPPORTED",
            Label::Refuted => "REFUTED",
            Label::Unsure => "UNSURE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    /// Accepts both the native names and the FEVER dataset names.
    fn from_str(s: &str) -> Result<Label> {
        match s.trim() {
            "SUPPORTED" | "SUPPORTS" => Ok(Label::Supported),
            "REFUTED" | "REFUTES" => Ok(Label::Refuted),
            "UNSURE" | "NOT ENOUGH INFO" => Ok(Label::Unsure),
            other => Err(Error::Format(format!("unknown label {other:?}"))),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    /// Filled from the enclosing document on load.
    #[serde(default, skip_serializing)]
    pub doc_id: String,
    pub index: usize,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub frames: BTreeSet<String>,
    #[serde(default)]
    pub in_scope: bool,
}

impl AnnotatedSentence {
    pub fn key(&self) -> EvidenceKey {
        (self.doc_id.clone(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub sentences: Vec<AnnotatedSentence>,
}

impl AnnotatedDocument {
    /// Checks the document invariants and fills in derived fields
    /// (sentence `doc_id`, fallback tokens).
    fn normalize(&mut self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::Validation("document with empty doc_id".into()));
        }
        for (position, sentence) in self.sentences.iter_mut().enumerate() {
            if sentence.index != position {
                return Err(Error::Validation(format!(
                    "document {:?}: sentence at position {position} has index {}",
                    self.doc_id, sentence.index
                )));
            }
            sentence.doc_id.clone_from(&self.doc_id);
            if sentence.tokens.is_empty() && !sentence.text.is_empty() {
                sentence.tokens = tokenize(&sentence.text);
            }
        }
        Ok(())
    }

    pub fn scope_sentences(&self) -> impl Iterator<Item = &AnnotatedSentence> {
        self.sentences.iter().filter(|s| s.in_scope)
    }
}

/// Documents indexed by `doc_id`, iterated in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: BTreeMap<String, AnnotatedDocument>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_documents(docs: impl IntoIterator<Item = AnnotatedDocument>) -> Result<Self> {
        let mut corpus = Corpus::new();
        for doc in docs {
            corpus.insert(doc)?;
        }
        Ok(corpus)
    }

    pub fn insert(&mut self, mut doc: AnnotatedDocument) -> Result<()> {
        doc.normalize()?;
        if self.docs.contains_key(&doc.doc_id) {
            return Err(Error::Duplicate {
                kind: "doc_id",
                id: doc.doc_id,
            });
        }
        self.docs.insert(doc.doc_id.clone(), doc);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&AnnotatedDocument> {
        self.docs.get(doc_id)
    }

    pub fn sentence(&self, doc_id: &str, index: usize) -> Option<&AnnotatedSentence> {
        self.docs.get(doc_id)?.sentences.get(index)
    }

    pub fn documents(&self) -> impl Iterator<Item = &AnnotatedDocument> {
        self.docs.values()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.docs.values().map(|d| d.sentences.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedClaim {
    #[serde(deserialize_with = "string_or_number")]
    pub claim_id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub frames: BTreeSet<String>,
    #[serde(default)]
    pub entities: BTreeSet<String>,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
    #[serde(rename = "evidence", default, skip_serializing_if = "Option::is_none")]
    pub gold_evidence: Option<Vec<BTreeSet<EvidenceKey>>>,
}

impl AnnotatedClaim {
    pub fn new(claim_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        AnnotatedClaim {
            claim_id: claim_id.into(),
            tokens: tokenize(&text),
            text,
            frames: BTreeSet::new(),
            entities: BTreeSet::new(),
            gold_label: None,
            gold_evidence: None,
        }
    }

    /// Every sentence that belongs to at least one gold evidence group.
    pub fn gold_sentences(&self) -> BTreeSet<EvidenceKey> {
        self.gold_evidence
            .iter()
            .flatten()
            .flat_map(|group| group.iter().cloned())
            .collect()
    }

    fn normalize(&mut self) -> Result<()> {
        if self.tokens.is_empty() && !self.text.is_empty() {
            self.tokens = tokenize(&self.text);
        }
        let groups = self.gold_evidence.as_deref().unwrap_or(&[]);
        match self.gold_label {
            Some(Label::Unsure) if groups.iter().any(|g| !g.is_empty()) => {
                Err(Error::Validation(format!(
                    "claim {:?} is UNSURE but carries gold evidence",
                    self.claim_id
                )))
            }
            Some(Label::Supported | Label::Refuted) if groups.iter().any(BTreeSet::is_empty) => {
                Err(Error::Validation(format!(
                    "claim {:?} has an empty evidence group",
                    self.claim_id
                )))
            }
            _ => Ok(()),
        }
    }
}

fn string_or_number<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Text(String),
        Int(i64),
    }
    Ok(match Id::deserialize(deserializer)? {
        Id::Text(s) => s,
        Id::Int(n) => n.to_string(),
    })
}

/// Fallback tokenizer for records that arrive without tokens: lowercase,
/// split on whitespace, strip surrounding punctuation, drop empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|word| word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::from_documents(read_jsonl::<AnnotatedDocument>(path)?)
}

pub fn save_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_jsonl(path, corpus.documents())
}

pub fn load_claims(path: &Path) -> Result<Vec<AnnotatedClaim>> {
    let mut claims: Vec<AnnotatedClaim> = read_jsonl(path)?;
    let mut seen = BTreeSet::new();
    for claim in &mut claims {
        claim.normalize()?;
        if !seen.insert(claim.claim_id.clone()) {
            return Err(Error::Duplicate {
                kind: "claim_id",
                id: claim.claim_id.clone(),
            });
        }
    }
    Ok(claims)
}

pub fn save_claims(path: &Path, claims: &[AnnotatedClaim]) -> Result<()> {
    write_jsonl(path, claims)
}

/// Indices into the claim slice for one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled, unstratified k-fold split. Fold sizes differ by at most one.
pub fn kfold_split(claims: &[AnnotatedClaim], k: usize, seed: u64) -> Result<Vec<Fold>> {
    check_folds(claims.len(), k)?;
    let mut order: Vec<usize> = (0..claims.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n = order.len();
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(finish_folds(folds, n))
}

/// Like [`kfold_split`], but each fold receives a near-equal share of every
/// gold label (unlabeled claims form their own stratum).
pub fn stratified_kfold_split(claims: &[AnnotatedClaim], k: usize, seed: u64) -> Result<Vec<Fold>> {
    check_folds(claims.len(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<Option<Label>, Vec<usize>> = BTreeMap::new();
    for (i, claim) in claims.iter().enumerate() {
        strata.entry(claim.gold_label).or_default().push(i);
    }
    let mut folds = vec![Vec::new(); k];
    let mut position = 0;
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[position % k].push(i);
            position += 1;
        }
    }
    Ok(finish_folds(folds, claims.len()))
}

fn check_folds(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::argument(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::argument(format!("k = {k} exceeds the number of claims ({n})")));
    }
    Ok(())
}

fn finish_folds(tests: Vec<Vec<usize>>, n: usize) -> Vec<Fold> {
    tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            for &i in &test {
                in_test[i] = true;
            }
            let train = (0..n).filter(|&i| !in_test[i]).collect();
            Fold { train, test }
        })
        .collect()
}
