//! Two-stage evidence retrieval and fixed-size evidence pools.
//!
//! Documents are found by exact normalized-title match against the claim's
//! entity mentions; sentences within them are kept when they share at least
//! one frame with the claim. Out-of-scope frame sentences can be mapped onto
//! in-scope sentences of the same document by solving an assignment problem
//! over `1 - jaccard` token costs.

mod hungarian;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use hungarian::{hungarian_assign, Assignment};

use crate::annotate::normalize_title;
use crate::corpus::{read_jsonl, write_jsonl, AnnotatedClaim, AnnotatedDocument, AnnotatedSentence, Corpus, EvidenceKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceCandidate {
    pub doc_id: String,
    pub sentence_index: usize,
    pub tokens: Vec<String>,
    pub frames: BTreeSet<String>,
    pub in_scope: bool,
    /// Frame or token Jaccard score, in `[0, 1]`.
    pub similarity: f64,
    pub utility_target: Option<u8>,
    /// Filler slot used to bring a pool up to `k + m` entries.
    pub pad: bool,
}

impl EvidenceCandidate {
    pub fn from_sentence(sentence: &AnnotatedSentence, similarity: f64) -> Self {
        EvidenceCandidate {
            doc_id: sentence.doc_id.clone(),
            sentence_index: sentence.index,
            tokens: sentence.tokens.clone(),
            frames: sentence.frames.clone(),
            in_scope: sentence.in_scope,
            similarity,
            utility_target: None,
            pad: false,
        }
    }

    pub fn padding() -> Self {
        EvidenceCandidate {
            doc_id: String::new(),
            sentence_index: 0,
            tokens: Vec::new(),
            frames: BTreeSet::new(),
            in_scope: false,
            similarity: 0.0,
            utility_target: None,
            pad: true,
        }
    }

    pub fn key(&self) -> EvidenceKey {
        (self.doc_id.clone(), self.sentence_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidencePool {
    pub claim_id: String,
    /// Documents retrieved for the claim, lexicographic.
    pub documents: Vec<String>,
    /// Exactly `k + m` entries; real candidates first, then padding.
    pub candidates: Vec<EvidenceCandidate>,
    pub k: usize,
    pub m: usize,
}

impl EvidencePool {
    pub fn slots(&self) -> usize {
        self.k + self.m
    }

    pub fn evidence(&self) -> impl Iterator<Item = &EvidenceCandidate> {
        self.candidates.iter().filter(|c| !c.pad)
    }

    pub fn utility_targets(&self) -> Option<Vec<u8>> {
        self.candidates.iter().map(|c| c.utility_target).collect()
    }

    pub fn to_record(&self) -> PoolRecord {
        PoolRecord {
            claim_id: self.claim_id.clone(),
            k: self.k,
            m: self.m,
            documents: self.documents.clone(),
            evidence: self
                .evidence()
                .map(|c| EvidenceRecord {
                    doc_id: c.doc_id.clone(),
                    sentence_index: c.sentence_index,
                    similarity: c.similarity,
                    in_scope: c.in_scope,
                    utility_target: c.utility_target,
                })
                .collect(),
        }
    }

    /// Rebuilds a pool from its file record, taking sentence content from
    /// the corpus and padding back to `k + m` slots.
    pub fn from_record(record: PoolRecord, corpus: &Corpus) -> Result<Self> {
        if record.k + record.m == 0 {
            return Err(Error::Validation(format!("pool {:?} has k + m = 0", record.claim_id)));
        }
        if record.evidence.len() > record.k + record.m {
            return Err(Error::Validation(format!(
                "pool {:?} has {} entries for {} slots",
                record.claim_id,
                record.evidence.len(),
                record.k + record.m
            )));
        }
        let labeled = record.evidence.first().is_some_and(|e| e.utility_target.is_some());
        let mut candidates = Vec::with_capacity(record.k + record.m);
        for e in record.evidence {
            let sentence = corpus.sentence(&e.doc_id, e.sentence_index).ok_or_else(|| {
                Error::Validation(format!(
                    "pool {:?} references unknown sentence ({:?}, {})",
                    record.claim_id, e.doc_id, e.sentence_index
                ))
            })?;
            let mut c = EvidenceCandidate::from_sentence(sentence, e.similarity);
            c.utility_target = e.utility_target;
            candidates.push(c);
        }
        pad_to(&mut candidates, record.k + record.m, labeled);
        Ok(EvidencePool {
            claim_id: record.claim_id,
            documents: record.documents,
            candidates,
            k: record.k,
            m: record.m,
        })
    }
}

/// Line format of a pool file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub claim_id: String,
    pub k: usize,
    pub m: usize,
    #[serde(default)]
    pub documents: Vec<String>,
    pub evidence: Vec<EvidenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub doc_id: String,
    pub sentence_index: usize,
    pub similarity: f64,
    pub in_scope: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_target: Option<u8>,
}

pub fn save_pools(path: &Path, pools: &[EvidencePool]) -> Result<()> {
    let records: Vec<PoolRecord> = pools.iter().map(EvidencePool::to_record).collect();
    write_jsonl(path, &records)
}

pub fn load_pools(path: &Path, corpus: &Corpus) -> Result<Vec<EvidencePool>> {
    read_jsonl::<PoolRecord>(path)?
        .into_iter()
        .map(|r| EvidencePool::from_record(r, corpus))
        .collect()
}

/// Token-set Jaccard similarity; 0 when both sides are empty.
pub fn jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    set_jaccard(&a, &b)
}

fn set_jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Documents whose normalized title equals a normalized claim entity.
pub fn retrieve_documents<'c>(claim: &AnnotatedClaim, corpus: &'c Corpus) -> Vec<&'c AnnotatedDocument> {
    if claim.entities.is_empty() {
        return Vec::new();
    }
    let wanted: BTreeSet<String> = claim.entities.iter().map(|e| normalize_title(e)).collect();
    corpus
        .documents()
        .filter(|d| wanted.contains(&normalize_title(&d.doc_id)))
        .collect()
}

fn rank(candidates: &mut [EvidenceCandidate]) {
    candidates.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then_with(|| a.sentence_index.cmp(&b.sentence_index))
    });
}

/// Sentences of `docs` sharing at least one frame with the claim, scored by
/// frame-set Jaccard and ranked best first (ties by doc id, then index).
pub fn retrieve_sentences(claim: &AnnotatedClaim, docs: &[&AnnotatedDocument]) -> Vec<EvidenceCandidate> {
    let mut out: Vec<EvidenceCandidate> = docs
        .iter()
        .flat_map(|d| d.sentences.iter())
        .filter(|s| !s.frames.is_disjoint(&claim.frames))
        .map(|s| EvidenceCandidate::from_sentence(s, set_jaccard(&s.frames, &claim.frames)))
        .collect();
    rank(&mut out);
    out
}

/// In-scope sentences of `docs`, scored by token Jaccard with the claim.
pub fn scope_candidates(claim: &AnnotatedClaim, docs: &[&AnnotatedDocument]) -> Vec<EvidenceCandidate> {
    let mut out: Vec<EvidenceCandidate> = docs
        .iter()
        .flat_map(|d| d.scope_sentences())
        .map(|s| EvidenceCandidate::from_sentence(s, jaccard(&claim.tokens, &s.tokens)))
        .collect();
    rank(&mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mapping {
    /// Index into the frame-sentence list.
    pub frame: usize,
    /// Index into the scope-sentence list.
    pub scope: usize,
    pub similarity: f64,
}

/// Optimal one-to-one mapping of frame sentences onto scope sentences under
/// cost `1 - jaccard(tokens)`.
pub fn map_out_of_scope(frame_sents: &[EvidenceCandidate], scope_sents: &[AnnotatedSentence]) -> Vec<Mapping> {
    if frame_sents.is_empty() || scope_sents.is_empty() {
        return Vec::new();
    }
    let sims: Vec<Vec<f64>> = frame_sents
        .iter()
        .map(|f| scope_sents.iter().map(|s| jaccard(&f.tokens, &s.tokens)).collect())
        .collect();
    let cost: Vec<Vec<f64>> = sims.iter().map(|row| row.iter().map(|s| 1.0 - s).collect()).collect();
    let assignment = hungarian_assign(&cost).expect("jaccard costs are finite and non-empty");
    assignment
        .pairs
        .into_iter()
        .map(|(frame, scope)| Mapping {
            frame,
            scope,
            similarity: sims[frame][scope],
        })
        .collect()
}

/// How mapped out-of-scope evidence enters the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapMode {
    /// No mapping.
    None,
    /// Mapped in-scope sentences are ranked ahead of the other scope
    /// candidates; frame candidates are untouched.
    #[default]
    MapAugment,
    /// Each out-of-scope frame candidate is replaced by its mapped in-scope
    /// sentence, keeping its rank and score.
    MapReplace,
}

impl std::str::FromStr for MapMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(MapMode::None),
            "map-augment" | "augment" => Ok(MapMode::MapAugment),
            "map-replace" | "replace" => Ok(MapMode::MapReplace),
            other => Err(Error::argument(format!("unknown map mode {other:?}"))),
        }
    }
}

/// How the top of each ranked list is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Sampling {
    #[default]
    TopK,
    /// Uniform sample without replacement; the stream is derived from the
    /// seed and the claim id, and chosen entries keep their rank order.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOptions {
    pub k: usize,
    pub m: usize,
    pub map_mode: MapMode,
    pub sampling: Sampling,
}

impl Default for RetrievalOptions {
    fn default() -> Self {
        RetrievalOptions {
            k: 3,
            m: 2,
            map_mode: MapMode::default(),
            sampling: Sampling::default(),
        }
    }
}

fn pad_to(candidates: &mut Vec<EvidenceCandidate>, slots: usize, labeled: bool) {
    while candidates.len() < slots {
        let mut pad = EvidenceCandidate::padding();
        if labeled {
            pad.utility_target = Some(0);
        }
        candidates.push(pad);
    }
}

fn choose(list: &[EvidenceCandidate], n: usize, sampling: Sampling, rng: &mut Option<ChaCha8Rng>) -> Vec<EvidenceCandidate> {
    match (sampling, rng) {
        (Sampling::Random { .. }, Some(rng)) if list.len() > n => {
            let mut picked = sample(rng, list.len(), n).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| list[i].clone()).collect()
        }
        _ => list.iter().take(n).cloned().collect(),
    }
}

/// Assembles a `k + m` slot pool from ranked frame and scope candidates.
pub fn build_pool(
    claim: &AnnotatedClaim,
    frame_sents: &[EvidenceCandidate],
    scope_sents: &[EvidenceCandidate],
    k: usize,
    m: usize,
) -> Result<EvidencePool> {
    build_pool_sampled(claim, frame_sents, scope_sents, k, m, Sampling::TopK)
}

pub fn build_pool_sampled(
    claim: &AnnotatedClaim,
    frame_sents: &[EvidenceCandidate],
    scope_sents: &[EvidenceCandidate],
    k: usize,
    m: usize,
    sampling: Sampling,
) -> Result<EvidencePool> {
    if k + m == 0 {
        return Err(Error::argument("k + m must be at least 1"));
    }
    let mut rng = match sampling {
        Sampling::Random { seed } => Some(ChaCha8Rng::seed_from_u64(stream_seed(seed, &claim.claim_id))),
        Sampling::TopK => None,
    };
    let mut candidates = choose(frame_sents, k, sampling, &mut rng);
    let taken: BTreeSet<EvidenceKey> = candidates.iter().map(EvidenceCandidate::key).collect();
    let remaining: Vec<EvidenceCandidate> = scope_sents
        .iter()
        .filter(|c| !taken.contains(&c.key()))
        .cloned()
        .collect();
    candidates.extend(choose(&remaining, m, sampling, &mut rng));

    let labeled = claim.gold_evidence.is_some();
    if labeled {
        let gold = claim.gold_sentences();
        for c in &mut candidates {
            c.utility_target = Some(u8::from(gold.contains(&c.key())));
        }
    }
    pad_to(&mut candidates, k + m, labeled);

    Ok(EvidencePool {
        claim_id: claim.claim_id.clone(),
        documents: Vec::new(),
        candidates,
        k,
        m,
    })
}

/// Full retrieval for one claim: documents, frame sentences, optional
/// out-of-scope mapping, then pooling.
pub fn retrieve_pool(claim: &AnnotatedClaim, corpus: &Corpus, opts: &RetrievalOptions) -> Result<EvidencePool> {
    let docs = retrieve_documents(claim, corpus);
    let mut frame = retrieve_sentences(claim, &docs);
    let mut scope = scope_candidates(claim, &docs);

    if opts.map_mode != MapMode::None {
        let mut mapped: Vec<(usize, EvidenceCandidate)> = Vec::new();
        for doc in &docs {
            let outside: Vec<usize> = (0..frame.len())
                .filter(|&i| frame[i].doc_id == doc.doc_id && !frame[i].in_scope)
                .collect();
            let targets: Vec<AnnotatedSentence> = doc.scope_sentences().cloned().collect();
            let sources: Vec<EvidenceCandidate> = outside.iter().map(|&i| frame[i].clone()).collect();
            for link in map_out_of_scope(&sources, &targets) {
                let score = match opts.map_mode {
                    MapMode::MapReplace => sources[link.frame].similarity,
                    _ => link.similarity,
                };
                mapped.push((outside[link.frame], EvidenceCandidate::from_sentence(&targets[link.scope], score)));
            }
        }
        match opts.map_mode {
            MapMode::MapReplace => {
                for (i, target) in mapped {
                    frame[i] = target;
                }
                dedup_keep_first(&mut frame);
            }
            MapMode::MapAugment => {
                let mut lead: Vec<EvidenceCandidate> = mapped.into_iter().map(|(_, c)| c).collect();
                rank(&mut lead);
                lead.extend(scope);
                dedup_keep_first(&mut lead);
                scope = lead;
            }
            MapMode::None => unreachable!(),
        }
    }

    let mut pool = build_pool_sampled(claim, &frame, &scope, opts.k, opts.m, opts.sampling)?;
    pool.documents = docs.iter().map(|d| d.doc_id.clone()).collect();
    Ok(pool)
}

fn dedup_keep_first(list: &mut Vec<EvidenceCandidate>) {
    let mut seen = BTreeSet::new();
    list.retain(|c| seen.insert(c.key()));
}

/// FNV-1a over the claim id, mixed with the seed: a stable per-claim stream
/// seed independent of platform and toolchain.
pub(crate) fn stream_seed(seed: u64, claim_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in claim_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrStats {
    pub claims: usize,
    pub avg_documents: f64,
    pub avg_sentences: f64,
}

/// Mean retrieved documents and (non-padding) evidence sentences per claim.
pub fn ir_stats(pools: &[EvidencePool]) -> Result<IrStats> {
    if pools.is_empty() {
        return Err(Error::argument("ir_stats needs at least one pool"));
    }
    let n = pools.len() as f64;
    let docs: usize = pools.iter().map(|p| p.documents.len()).sum();
    let sents: usize = pools.iter().map(|p| p.evidence().count()).sum();
    Ok(IrStats {
        claims: pools.len(),
        avg_documents: docs as f64 / n,
        avg_sentences: sents as f64 / n,
    })
}

/// Groups pools by claim id, rejecting duplicates.
pub fn index_pools(pools: &[EvidencePool]) -> Result<BTreeMap<&str, &EvidencePool>> {
    let mut out = BTreeMap::new();
    for p in pools {
        if out.insert(p.claim_id.as_str(), p).is_some() {
            return Err(Error::Duplicate {
                kind: "pool for claim",
                id: p.claim_id.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(doc: &str, index: usize, tokens: &str, frames: &[&str], in_scope: bool) -> AnnotatedSentence {
        AnnotatedSentence {
            doc_id: doc.into(),
            index,
            text: tokens.into(),
            tokens: tokens.split_whitespace().map(String::from).collect(),
            frames: frames.iter().map(|f| f.to_string()).collect(),
            in_scope,
        }
    }

    fn doc(id: &str, sentences: Vec<AnnotatedSentence>) -> AnnotatedDocument {
        AnnotatedDocument {
            doc_id: id.into(),
            sentences,
        }
    }

    fn claim(entities: &[&str], frames: &[&str]) -> AnnotatedClaim {
        let mut c = AnnotatedClaim::new("c1", "some claim text");
        c.entities = entities.iter().map(|e| e.to_string()).collect();
        c.frames = frames.iter().map(|f| f.to_string()).collect();
        c
    }

    fn cand(doc: &str, index: usize, sim: f64) -> EvidenceCandidate {
        let mut c = EvidenceCandidate::from_sentence(&sentence(doc, index, "x", &[], false), sim);
        c.tokens = vec![format!("{doc}{index}")];
        c
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard(&["a", "b"], &["a", "b"]), 1.0);
        assert_eq!(jaccard(&["a", "b"], &["c"]), 0.0);
        assert_eq!(jaccard(&["a", "b", "c"], &["b", "c", "d"]), 0.5);
        assert_eq!(jaccard::<&str>(&[], &[]), 0.0);
        assert_eq!(jaccard(&["a", "a", "b"], &["b", "a"]), 1.0);
    }

    #[test]
    fn documents_by_exact_title() {
        let corpus = Corpus::from_documents([doc("barack_obama", vec![]), doc("b", vec![])]).unwrap();
        let ids = |c: &AnnotatedClaim| -> Vec<String> {
            retrieve_documents(c, &corpus).iter().map(|d| d.doc_id.clone()).collect()
        };
        assert_eq!(ids(&claim(&["barack_obama"], &[])), vec!["barack_obama"]);
        assert!(ids(&claim(&[], &[])).is_empty());
        assert_eq!(ids(&claim(&["a", "b"], &[])), vec!["b"]);
    }

    #[test]
    fn sentence_retrieval_scores_by_frame_jaccard() {
        let d = doc(
            "D",
            vec![
                sentence("D", 0, "x", &["F1", "F2"], true),
                sentence("D", 1, "y", &["F2"], false),
                sentence("D", 2, "z", &["F1"], false),
            ],
        );
        let got = retrieve_sentences(&claim(&[], &["F1"]), &[&d]);
        assert_eq!(got.len(), 2);
        assert_eq!((got[0].sentence_index, got[0].similarity), (2, 1.0));
        assert_eq!((got[1].sentence_index, got[1].similarity), (0, 0.5));
        assert!(retrieve_sentences(&claim(&[], &[]), &[&d]).is_empty());
        assert!(retrieve_sentences(&claim(&[], &["F3"]), &[&d]).is_empty());
    }

    #[test]
    fn identical_sentence_maps_with_similarity_one() {
        let frame = vec![EvidenceCandidate::from_sentence(&sentence("D", 5, "a b c", &[], false), 1.0)];
        let scope = vec![sentence("D", 0, "q r", &[], true), sentence("D", 1, "a b c", &[], true)];
        let m = map_out_of_scope(&frame, &scope);
        assert_eq!(m, vec![Mapping { frame: 0, scope: 1, similarity: 1.0 }]);
    }

    #[test]
    fn mapping_is_min_of_sizes() {
        let frame = vec![cand("D", 4, 1.0), cand("D", 5, 1.0)];
        let scope = vec![sentence("D", 0, "a", &[], true)];
        assert_eq!(map_out_of_scope(&frame, &scope).len(), 1);
        assert!(map_out_of_scope(&[], &scope).is_empty());
        assert!(map_out_of_scope(&frame, &[]).is_empty());
    }

    #[test]
    fn mapping_prefers_cross_assignment() {
        // f0 = {a,b,c}, f1 = {d,e};  s0 = {d,e,x}, s1 = {a,b,c,y}
        // J(f0,s0)=0, J(f0,s1)=3/4, J(f1,s0)=2/3, J(f1,s1)=0
        // straight cost = 1 + 1 = 2; cross cost = 1/4 + 1/3 = 7/12
        let frame = vec![
            EvidenceCandidate::from_sentence(&sentence("D", 3, "a b c", &[], false), 1.0),
            EvidenceCandidate::from_sentence(&sentence("D", 4, "d e", &[], false), 1.0),
        ];
        let scope = vec![sentence("D", 0, "d e x", &[], true), sentence("D", 1, "a b c y", &[], true)];
        let m = map_out_of_scope(&frame, &scope);
        assert_eq!(m.iter().map(|l| (l.frame, l.scope)).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        assert_eq!(m[0].similarity, 0.75);
        assert!((m[1].similarity - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pool_takes_top_k() {
        let frames: Vec<_> = (0..5).map(|i| cand("D", i, 1.0 - i as f64 * 0.1)).collect();
        let pool = build_pool(&claim(&[], &[]), &frames, &[], 2, 0).unwrap();
        assert_eq!(pool.candidates.len(), 2);
        assert_eq!(pool.candidates[0].sentence_index, 0);
        assert_eq!(pool.candidates[1].sentence_index, 1);
    }

    #[test]
    fn pool_pads_to_size() {
        let pool = build_pool(&claim(&[], &[]), &[cand("D", 0, 0.5)], &[], 3, 0).unwrap();
        assert_eq!(pool.candidates.len(), 3);
        assert_eq!(pool.evidence().count(), 1);
        assert!(pool.candidates[1].pad && pool.candidates[1].tokens.is_empty());
        assert_eq!(pool.candidates[2].similarity, 0.0);
    }

    #[test]
    fn utility_targets_follow_gold() {
        let mut c = claim(&[], &[]);
        c.gold_evidence = Some(vec![[("D".to_string(), 1)].into_iter().collect()]);
        let pool = build_pool(&c, &[cand("D", 1, 0.9), cand("D", 2, 0.8)], &[], 2, 1).unwrap();
        assert_eq!(pool.utility_targets(), Some(vec![1, 0, 0]));
        let unlabeled = build_pool(&claim(&[], &[]), &[cand("D", 1, 0.9)], &[], 2, 0).unwrap();
        assert_eq!(unlabeled.utility_targets(), None);
    }

    #[test]
    fn scope_part_skips_frame_duplicates() {
        let frames = vec![cand("D", 0, 0.9)];
        let scope = vec![cand("D", 0, 0.9), cand("D", 1, 0.2)];
        let pool = build_pool(&claim(&[], &[]), &frames, &scope, 1, 1).unwrap();
        assert_eq!(pool.candidates[1].sentence_index, 1);
    }

    #[test]
    fn zero_slots_rejected() {
        assert!(matches!(build_pool(&claim(&[], &[]), &[], &[], 0, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn random_sampling_is_seeded() {
        let frames: Vec<_> = (0..10).map(|i| cand("D", i, 1.0 - i as f64 * 0.05)).collect();
        let s = Sampling::Random { seed: 5 };
        let a = build_pool_sampled(&claim(&[], &[]), &frames, &[], 3, 0, s).unwrap();
        let b = build_pool_sampled(&claim(&[], &[]), &frames, &[], 3, 0, s).unwrap();
        assert_eq!(a, b);
        let idx: Vec<usize> = a.candidates.iter().map(|c| c.sentence_index).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ir_stats_means() {
        let mut a = build_pool(&claim(&[], &[]), &[cand("D", 0, 1.0)], &[], 1, 0).unwrap();
        let mut b = a.clone();
        a.documents = vec!["D".into()];
        b.documents = vec!["D".into(), "E".into(), "F".into()];
        let s = ir_stats(&[a.clone(), b]).unwrap();
        assert_eq!(s.avg_documents, 2.0);
        a.documents.clear();
        assert_eq!(ir_stats(&[a]).unwrap().avg_documents, 0.0);
        assert!(ir_stats(&[]).is_err());
    }

    #[test]
    fn map_modes() {
        let d = doc(
            "D",
            vec![
                sentence("D", 0, "alpha beta", &[], true),
                sentence("D", 1, "gamma delta", &[], true),
                sentence("D", 2, "gamma delta epsilon", &["F"], false),
            ],
        );
        let corpus = Corpus::from_documents([d]).unwrap();
        let mut c = claim(&["D"], &["F"]);
        c.tokens = vec!["alpha".into()];

        let opts = |map_mode| RetrievalOptions {
            k: 1,
            m: 1,
            map_mode,
            sampling: Sampling::TopK,
        };
        let idx = |p: &EvidencePool| p.candidates.iter().map(|c| (c.sentence_index, c.pad)).collect::<Vec<_>>();

        let none = retrieve_pool(&c, &corpus, &opts(MapMode::None)).unwrap();
        assert_eq!(idx(&none), vec![(2, false), (0, false)]);
        assert_eq!(none.documents, vec!["D"]);

        // sentence 2 maps onto sentence 1 (J = 2/3), which leads the scope list
        let augment = retrieve_pool(&c, &corpus, &opts(MapMode::MapAugment)).unwrap();
        assert_eq!(idx(&augment), vec![(2, false), (1, false)]);

        let replace = retrieve_pool(&c, &corpus, &opts(MapMode::MapReplace)).unwrap();
        assert_eq!(idx(&replace), vec![(1, false), (0, false)]);
        assert_eq!(replace.candidates[0].similarity, 1.0);
    }

    #[test]
    fn record_round_trip() {
        let d = doc("D", vec![sentence("D", 0, "a b", &["F"], true)]);
        let corpus = Corpus::from_documents([d]).unwrap();
        let mut c = claim(&["D"], &["F"]);
        c.gold_evidence = Some(vec![[("D".to_string(), 0)].into_iter().collect()]);
        let pool = retrieve_pool(&c, &corpus, &RetrievalOptions::default()).unwrap();
        let back = EvidencePool::from_record(pool.to_record(), &corpus).unwrap();
        assert_eq!(back, pool);
    }
}
