//! The three verifier architectures.
//!
//! * **Plain** (`V1`, `V2`): `h⁰ = [c; ē; cos(c, ē)]` through one or two ReLU
//!   layers and a 3-way softmax, where `ē` averages the evidence vectors.
//! * **Multi-task** (`Mt`): a claim encoder and a shared two-layer evidence
//!   encoder. The claim head sees `[c²; mean_i e_i²]`; a utility head scores
//!   each `e_i²` as useful / not useful.
//! * **Multi-task with Gumbel utility** (`MtGumbel`): each `e_i²` is weighted
//!   by a Gumbel-Softmax utility sample `z_i` through the outer product
//!   `o_i = e_i² z_iᵀ` (flattened row-major, `o[r·2 + k] = e_i²[r]·z_i[k]`).
//!   The claim head sees `[c²; mean_i o_i]` and the utility head scores `o_i`.
//!
//! Utility class 1 means "useful". Embeddings are fixed; only the dense
//! layers are trained.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedClaim, EvidenceKey, Label};
use crate::embed::{cosine, embed_text, EmbeddingTable};
use crate::error::{Error, Result};
use crate::neural::{
    assign_params, cross_entropy, dropout_mask, flatten_grads, flatten_params, gumbel_softmax_with_noise, relu,
    relu_backward, sample_gumbel, sgd_step, softmax, softmax_backward, DenseLayer, TrainConfig, CE_FLOOR,
};
use crate::retrieval::{stream_seed, EvidencePool};

pub const NUM_LABELS: usize = 3;
/// Threshold on P(useful) for keeping a piece of evidence.
pub const UTILITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plain verifier, one hidden layer.
    V1,
    /// Plain verifier, two hidden layers.
    V2,
    /// Multi-task verifier.
    Mt,
    /// Multi-task verifier with Gumbel-Softmax utilities.
    MtGumbel,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::V1, Variant::V2, Variant::Mt, Variant::MtGumbel];

    pub fn is_multitask(self) -> bool {
        matches!(self, Variant::Mt | Variant::MtGumbel)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::V1 => "v1",
            Variant::V2 => "v2",
            Variant::Mt => "mt",
            Variant::MtGumbel => "mt-gumbel",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown variant {s:?} (v1, v2, mt, mt-gumbel)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlainNet {
    pub hidden: Vec<DenseLayer>,
    pub output: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskNet {
    pub claim_encoder: [DenseLayer; 2],
    /// Shared by every evidence slot.
    pub evidence_encoder: [DenseLayer; 2],
    /// Utility logits fed to the Gumbel-Softmax (`MtGumbel` only).
    pub gumbel: Option<DenseLayer>,
    pub claim_head: DenseLayer,
    pub utility_head: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Plain(PlainNet),
    MultiTask(MultiTaskNet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifierParams {
    pub variant: Variant,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub net: Network,
}

impl VerifierParams {
    /// Glorot-initialized parameters.
    pub fn new(variant: Variant, embedding_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Self::build(variant, embedding_dim, hidden, |i, o| DenseLayer::glorot(i, o, rng))
    }

    /// All-zero parameters (uniform label probabilities).
    pub fn zeros(variant: Variant, embedding_dim: usize, hidden: usize) -> Self {
        Self::build(variant, embedding_dim, hidden, DenseLayer::zeros)
    }

    fn build(
        variant: Variant,
        d: usize,
        h: usize,
        mut layer: impl FnMut(usize, usize) -> DenseLayer,
    ) -> Self {
        let net = match variant {
            Variant::V1 | Variant::V2 => {
                let depth = if variant == Variant::V1 { 1 } else { 2 };
                let mut hidden = vec![layer(2 * d + 1, h)];
                if depth == 2 {
                    hidden.push(layer(h, h));
                }
                Network::Plain(PlainNet {
                    hidden,
                    output: layer(h, NUM_LABELS),
                })
            }
            Variant::Mt | Variant::MtGumbel => {
                let gumbel = variant == Variant::MtGumbel;
                let claim_encoder = [layer(d, h), layer(h, h)];
                let evidence_encoder = [layer(d + 1, h), layer(h, h)];
                let gumbel_layer = gumbel.then(|| layer(h, 2));
                let rep = if gumbel { 2 * h } else { h };
                Network::MultiTask(MultiTaskNet {
                    claim_encoder,
                    evidence_encoder,
                    gumbel: gumbel_layer,
                    claim_head: layer(h + rep, NUM_LABELS),
                    utility_head: layer(rep, 2),
                })
            }
        };
        VerifierParams {
            variant,
            embedding_dim: d,
            hidden: h,
            net,
        }
    }

    /// Layers with stable names, in flattening order.
    pub fn named_layers(&self) -> Vec<(String, &DenseLayer)> {
        match &self.net {
            Network::Plain(p) => {
                let mut out: Vec<(String, &DenseLayer)> =
                    p.hidden.iter().enumerate().map(|(i, l)| (format!("hidden.{i}"), l)).collect();
                out.push(("output".into(), &p.output));
                out
            }
            Network::MultiTask(m) => {
                let mut out = vec![
                    ("claim_encoder.0".to_string(), &m.claim_encoder[0]),
                    ("claim_encoder.1".to_string(), &m.claim_encoder[1]),
                    ("evidence_encoder.0".to_string(), &m.evidence_encoder[0]),
                    ("evidence_encoder.1".to_string(), &m.evidence_encoder[1]),
                ];
                if let Some(g) = &m.gumbel {
                    out.push(("gumbel".into(), g));
                }
                out.push(("claim_head".into(), &m.claim_head));
                out.push(("utility_head".into(), &m.utility_head));
                out
            }
        }
    }

    pub fn layers(&self) -> Vec<&DenseLayer> {
        self.named_layers().into_iter().map(|(_, l)| l).collect()
    }

    pub fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        match &mut self.net {
            Network::Plain(p) => p.hidden.iter_mut().chain(std::iter::once(&mut p.output)).collect(),
            Network::MultiTask(m) => {
                let [c0, c1] = &mut m.claim_encoder;
                let [e0, e1] = &mut m.evidence_encoder;
                let mut out = vec![c0, c1, e0, e1];
                if let Some(g) = &mut m.gumbel {
                    out.push(g);
                }
                out.push(&mut m.claim_head);
                out.push(&mut m.utility_head);
                out
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// Parameters of the shared evidence encoder (0 for plain variants).
    pub fn evidence_encoder_param_count(&self) -> usize {
        match &self.net {
            Network::Plain(_) => 0,
            Network::MultiTask(m) => m.evidence_encoder.iter().map(DenseLayer::param_count).sum(),
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        flatten_params(&self.layers())
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        flatten_grads(&self.layers())
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        assign_params(&mut self.layers_mut(), values)
    }

    pub fn zero_grad(&mut self) {
        self.layers_mut().into_iter().for_each(DenseLayer::zero_grad);
    }
}

/// Embedded claim and evidence slots.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInput {
    pub claim: Vec<f64>,
    pub evidence: Vec<Vec<f64>>,
    /// True for padding slots; plain verifiers ignore them.
    pub pad: Vec<bool>,
}

impl EncodedInput {
    pub fn new(claim: Vec<f64>, evidence: Vec<Vec<f64>>) -> Self {
        let pad = vec![false; evidence.len()];
        EncodedInput { claim, evidence, pad }
    }

    pub fn encode(claim: &AnnotatedClaim, pool: &EvidencePool, table: &EmbeddingTable) -> Self {
        EncodedInput {
            claim: embed_text(&claim.tokens, table),
            evidence: pool
                .candidates
                .iter()
                .map(|c| if c.pad { vec![0.0; table.dim()] } else { embed_text(&c.tokens, table) })
                .collect(),
            pad: pool.candidates.iter().map(|c| c.pad).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub input: EncodedInput,
    pub label: Label,
    /// One 0/1 target per slot; required by multi-task variants.
    pub utilities: Option<Vec<u8>>,
}

/// Stochastic behaviour of one forward pass.
#[derive(Debug, Default)]
pub struct PassOptions<'a> {
    /// Enables dropout on plain verifiers.
    pub training: bool,
    pub dropout: f64,
    pub tau: f64,
    /// Source of dropout masks and Gumbel noise.
    pub rng: Option<&'a mut ChaCha8Rng>,
    /// Per-slot Gumbel noise to use instead of sampling.
    pub frozen_noise: Option<&'a [[f64; 2]]>,
}

impl<'a> PassOptions<'a> {
    /// Deterministic pass: no dropout, Gumbel noise frozen (or zero).
    pub fn eval(tau: f64, frozen_noise: Option<&'a [[f64; 2]]>) -> Self {
        PassOptions {
            training: false,
            dropout: 0.0,
            tau,
            rng: None,
            frozen_noise,
        }
    }

    fn noise_for(&mut self, slot: usize) -> Result<[f64; 2]> {
        if let Some(frozen) = self.frozen_noise {
            return frozen
                .get(slot)
                .copied()
                .ok_or_else(|| Error::argument(format!("no frozen gumbel noise for slot {slot}")));
        }
        Ok(match self.rng.as_deref_mut() {
            Some(rng) => {
                let g = sample_gumbel(2, rng);
                [g[0], g[1]]
            }
            None => [0.0, 0.0],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub label_probs: Vec<f64>,
    /// Per-slot P(useful); `None` for plain verifiers.
    pub utilities: Option<Vec<f64>>,
    /// Per-slot Gumbel samples `z_i` (`MtGumbel` only).
    pub gumbel: Option<Vec<[f64; 2]>>,
}

impl ForwardOutput {
    pub fn label(&self) -> Label {
        Label::from_index(argmax(&self.label_probs)).expect("three label probabilities")
    }
}

fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
struct PlainCache {
    h0: Vec<f64>,
    /// Post-ReLU activations, per hidden layer.
    acts: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
    /// `acts ⊙ masks`, i.e. the input to the next layer.
    outs: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct SlotCache {
    e0: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
    z: Option<[f64; 2]>,
    /// Utility-head input: `e2` or the flattened outer product.
    rep: Vec<f64>,
    utility: Vec<f64>,
}

#[derive(Debug, Clone)]
struct MultiTaskCache {
    c0: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    slots: Vec<SlotCache>,
    head_input: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Cache {
    Plain(PlainCache),
    MultiTask(MultiTaskCache),
}

/// Claim loss and (unweighted) mean per-slot utility loss.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub claim: f64,
    pub utility: f64,
}

impl LossParts {
    pub fn total(&self, lambda: f64) -> f64 {
        self.claim + lambda * self.utility
    }
}

fn mean_of(vectors: &[&Vec<f64>], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    if vectors.is_empty() {
        return out;
    }
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    let n = vectors.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

fn outer_flat(e: &[f64], z: &[f64; 2]) -> Vec<f64> {
    e.iter().flat_map(|&v| [v * z[0], v * z[1]]).collect()
}

impl PlainNet {
    fn forward(&self, input: &EncodedInput, d: usize, opts: &mut PassOptions) -> Result<PlainCache> {
        let real: Vec<&Vec<f64>> = input
            .evidence
            .iter()
            .zip(&input.pad)
            .filter(|(_, &pad)| !pad)
            .map(|(e, _)| e)
            .collect();
        if real.iter().any(|e| e.len() != d) {
            return Err(Error::argument("evidence vector dimension mismatch"));
        }
        let e_bar = mean_of(&real, d);
        let cos = cosine(&input.claim, &e_bar)?;
        let mut h0 = Vec::with_capacity(2 * d + 1);
        h0.extend_from_slice(&input.claim);
        h0.extend_from_slice(&e_bar);
        h0.push(cos);

        let mut acts = Vec::new();
        let mut masks = Vec::new();
        let mut outs: Vec<Vec<f64>> = Vec::new();
        for layer in &self.hidden {
            let x = outs.last().unwrap_or(&h0);
            let a = relu(&layer.forward(x)?);
            let mask = match opts.rng.as_deref_mut() {
                Some(rng) => dropout_mask(a.len(), opts.dropout, opts.training, rng),
                None => vec![1.0; a.len()],
            };
            let out = a.iter().zip(&mask).map(|(v, m)| v * m).collect();
            acts.push(a);
            masks.push(mask);
            outs.push(out);
        }
        let probs = softmax(&self.output.forward(outs.last().unwrap_or(&h0))?);
        Ok(PlainCache {
            h0,
            acts,
            masks,
            outs,
            probs,
        })
    }

    fn backward(&mut self, cache: &PlainCache, label: Label) -> Result<f64> {
        let loss = cross_entropy(&cache.probs, label.index())?;
        let mut dy = cache.probs.clone();
        dy[label.index()] -= 1.0;
        let last = cache.outs.last().unwrap_or(&cache.h0);
        self.output.accumulate(&dy, last);
        let mut grad = self.output.backward_input(&dy);
        for l in (0..self.hidden.len()).rev() {
            let masked: Vec<f64> = grad.iter().zip(&cache.masks[l]).map(|(g, m)| g * m).collect();
            let d_pre = relu_backward(&masked, &cache.acts[l]);
            let input = if l == 0 { &cache.h0 } else { &cache.outs[l - 1] };
            self.hidden[l].accumulate(&d_pre, input);
            if l > 0 {
                grad = self.hidden[l].backward_input(&d_pre);
            }
        }
        Ok(loss)
    }
}

impl MultiTaskNet {
    fn forward(&self, input: &EncodedInput, d: usize, h: usize, opts: &mut PassOptions) -> Result<MultiTaskCache> {
        let c0 = input.claim.clone();
        let c1 = relu(&self.claim_encoder[0].forward(&c0)?);
        let c2 = relu(&self.claim_encoder[1].forward(&c1)?);

        let mut slots = Vec::with_capacity(input.evidence.len());
        for (i, e) in input.evidence.iter().enumerate() {
            if e.len() != d {
                return Err(Error::argument("evidence vector dimension mismatch"));
            }
            let mut e0 = e.clone();
            e0.push(cosine(&c0, e)?);
            let e1 = relu(&self.evidence_encoder[0].forward(&e0)?);
            let e2 = relu(&self.evidence_encoder[1].forward(&e1)?);
            let (z, rep) = match &self.gumbel {
                Some(g) => {
                    let noise = opts.noise_for(i)?;
                    let p = gumbel_softmax_with_noise(&g.forward(&e2)?, &noise, opts.tau)?;
                    let z = [p[0], p[1]];
                    (Some(z), outer_flat(&e2, &z))
                }
                None => (None, e2.clone()),
            };
            let utility = softmax(&self.utility_head.forward(&rep)?);
            slots.push(SlotCache {
                e0,
                e1,
                e2,
                z,
                rep,
                utility,
            });
        }

        let rep_len = if self.gumbel.is_some() { 2 * h } else { h };
        let reps: Vec<&Vec<f64>> = slots.iter().map(|s| &s.rep).collect();
        let mut head_input = c2.clone();
        head_input.extend(mean_of(&reps, rep_len));
        let probs = softmax(&self.claim_head.forward(&head_input)?);
        Ok(MultiTaskCache {
            c0,
            c1,
            c2,
            slots,
            head_input,
            probs,
        })
    }

    fn backward(
        &mut self,
        cache: &MultiTaskCache,
        h: usize,
        tau: f64,
        label: Label,
        targets: Option<&[u8]>,
        lambda: f64,
    ) -> Result<LossParts> {
        let n = cache.slots.len();
        if let Some(t) = targets {
            if t.len() != n {
                return Err(Error::argument(format!("{} utility targets for {n} slots", t.len())));
            }
        }
        let mut parts = LossParts {
            claim: cross_entropy(&cache.probs, label.index())?,
            utility: 0.0,
        };
        let mut dy = cache.probs.clone();
        dy[label.index()] -= 1.0;
        self.claim_head.accumulate(&dy, &cache.head_input);
        let dx = self.claim_head.backward_input(&dy);
        let (dc2, drep) = dx.split_at(h);

        let scale = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        for (i, slot) in cache.slots.iter().enumerate() {
            let mut d_rep: Vec<f64> = drep.iter().map(|g| g * scale).collect();
            if let Some(t) = targets {
                let target = usize::from(t[i]);
                parts.utility += cross_entropy(&slot.utility, target)? * scale;
                let mut du: Vec<f64> = slot.utility.clone();
                du[target] -= 1.0;
                du.iter_mut().for_each(|g| *g *= lambda * scale);
                self.utility_head.accumulate(&du, &slot.rep);
                for (a, b) in d_rep.iter_mut().zip(self.utility_head.backward_input(&du)) {
                    *a += b;
                }
            }

            let mut de2 = match (&mut self.gumbel, slot.z) {
                (Some(g), Some(z)) => {
                    let mut de2 = vec![0.0; h];
                    let mut dz = [0.0; 2];
                    for r in 0..h {
                        let (g0, g1) = (d_rep[2 * r], d_rep[2 * r + 1]);
                        de2[r] = g0 * z[0] + g1 * z[1];
                        dz[0] += g0 * slot.e2[r];
                        dz[1] += g1 * slot.e2[r];
                    }
                    let da: Vec<f64> = softmax_backward(&z, &dz).into_iter().map(|v| v / tau).collect();
                    g.accumulate(&da, &slot.e2);
                    for (a, b) in de2.iter_mut().zip(g.backward_input(&da)) {
                        *a += b;
                    }
                    de2
                }
                _ => d_rep,
            };
            de2 = relu_backward(&de2, &slot.e2);
            self.evidence_encoder[1].accumulate(&de2, &slot.e1);
            let de1 = relu_backward(&self.evidence_encoder[1].backward_input(&de2), &slot.e1);
            self.evidence_encoder[0].accumulate(&de1, &slot.e0);
        }

        let dc2 = relu_backward(dc2, &cache.c2);
        self.claim_encoder[1].accumulate(&dc2, &cache.c1);
        let dc1 = relu_backward(&self.claim_encoder[1].backward_input(&dc2), &cache.c1);
        self.claim_encoder[0].accumulate(&dc1, &cache.c0);
        Ok(parts)
    }
}

impl VerifierParams {
    fn forward_cached(&self, input: &EncodedInput, opts: &mut PassOptions) -> Result<(ForwardOutput, Cache)> {
        if input.claim.len() != self.embedding_dim {
            return Err(Error::argument(format!(
                "claim vector has dimension {}, model expects {}",
                input.claim.len(),
                self.embedding_dim
            )));
        }
        if input.pad.len() != input.evidence.len() {
            return Err(Error::argument("pad flags and evidence slots differ in length"));
        }
        match &self.net {
            Network::Plain(p) => {
                let cache = p.forward(input, self.embedding_dim, opts)?;
                let out = ForwardOutput {
                    label_probs: cache.probs.clone(),
                    utilities: None,
                    gumbel: None,
                };
                Ok((out, Cache::Plain(cache)))
            }
            Network::MultiTask(m) => {
                let cache = m.forward(input, self.embedding_dim, self.hidden, opts)?;
                let out = ForwardOutput {
                    label_probs: cache.probs.clone(),
                    utilities: Some(cache.slots.iter().map(|s| s.utility[1]).collect()),
                    gumbel: m.gumbel.as_ref().map(|_| cache.slots.iter().filter_map(|s| s.z).collect()),
                };
                Ok((out, Cache::MultiTask(cache)))
            }
        }
    }

    pub fn forward(&self, input: &EncodedInput, opts: &mut PassOptions) -> Result<ForwardOutput> {
        Ok(self.forward_cached(input, opts)?.0)
    }

    /// Forward and backward for one example. Gradients are *added* to the
    /// layers' buffers; L2 is not included.
    pub fn accumulate_gradients(
        &mut self,
        example: &TrainingExample,
        opts: &mut PassOptions,
        lambda: f64,
    ) -> Result<(ForwardOutput, LossParts)> {
        let tau = opts.tau;
        let (out, cache) = self.forward_cached(&example.input, opts)?;
        let (h, label) = (self.hidden, example.label);
        let parts = match (&mut self.net, cache) {
            (Network::Plain(p), Cache::Plain(c)) => LossParts {
                claim: p.backward(&c, label)?,
                utility: 0.0,
            },
            (Network::MultiTask(m), Cache::MultiTask(c)) => {
                let targets = example
                    .utilities
                    .as_deref()
                    .ok_or_else(|| Error::argument("multi-task training needs utility targets"))?;
                m.backward(&c, h, tau, label, Some(targets), lambda)?
            }
            _ => unreachable!("cache matches network"),
        };
        Ok((out, parts))
    }

    /// Loss and flat gradient at the current parameters (gradients reset first).
    pub fn loss_and_gradient(
        &mut self,
        example: &TrainingExample,
        opts: &mut PassOptions,
        lambda: f64,
    ) -> Result<(f64, Vec<f64>)> {
        self.zero_grad();
        let (_, parts) = self.accumulate_gradients(example, opts, lambda)?;
        let grads = self.flat_grads();
        self.zero_grad();
        Ok((parts.total(lambda), grads))
    }
}

fn expect_variant(params: &VerifierParams, allowed: &[Variant]) -> Result<()> {
    if allowed.contains(&params.variant) {
        Ok(())
    } else {
        Err(Error::argument(format!("operation not defined for variant {}", params.variant)))
    }
}

/// Plain verifier forward pass in eval mode.
pub fn forward_verifier(params: &VerifierParams, claim_vec: &[f64], evidence_vecs: &[Vec<f64>]) -> Result<ForwardOutput> {
    expect_variant(params, &[Variant::V1, Variant::V2])?;
    params.forward(
        &EncodedInput::new(claim_vec.to_vec(), evidence_vecs.to_vec()),
        &mut PassOptions::eval(1.0, None),
    )
}

/// Multi-task forward pass; `slots` must equal `k + m`.
pub fn forward_mt(params: &VerifierParams, input: &EncodedInput, slots: usize) -> Result<ForwardOutput> {
    expect_variant(params, &[Variant::Mt])?;
    check_slots(input, slots)?;
    params.forward(input, &mut PassOptions::eval(1.0, None))
}

/// Gumbel multi-task forward pass drawing fresh noise from `rng`.
pub fn forward_mt_gumbel(
    params: &VerifierParams,
    input: &EncodedInput,
    slots: usize,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ForwardOutput> {
    expect_variant(params, &[Variant::MtGumbel])?;
    check_slots(input, slots)?;
    let mut opts = PassOptions {
        tau,
        rng: Some(rng),
        ..PassOptions::default()
    };
    params.forward(input, &mut opts)
}

fn check_slots(input: &EncodedInput, slots: usize) -> Result<()> {
    if input.evidence.len() != slots {
        return Err(Error::argument(format!(
            "pool has {} slots, expected k + m = {slots}",
            input.evidence.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub claim_id: String,
    pub label: Label,
    pub label_probs: Vec<f64>,
    pub utilities: Option<Vec<f64>>,
    pub selected_evidence: Vec<EvidenceKey>,
}

/// `CE(ŷ_c, gold) + λ · mean_i CE(û_i, u_i)`.
pub fn multitask_loss(pred: &Prediction, gold_label: Label, utility_targets: &[u8], lambda: f64) -> Result<f64> {
    let utilities = pred
        .utilities
        .as_ref()
        .ok_or_else(|| Error::argument("prediction has no utilities"))?;
    if utilities.len() != utility_targets.len() || utilities.is_empty() {
        return Err(Error::argument(format!(
            "{} utility targets for {} slots",
            utility_targets.len(),
            utilities.len()
        )));
    }
    let claim = cross_entropy(&pred.label_probs, gold_label.index())?;
    let utility: f64 = utilities
        .iter()
        .zip(utility_targets)
        .map(|(&p, &t)| -(if t == 1 { p } else { 1.0 - p }).max(CE_FLOOR).ln())
        .sum::<f64>()
        / utilities.len() as f64;
    Ok(claim + lambda * utility)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub claim_loss: f64,
    pub utility_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: VerifierParams,
    pub history: Vec<EpochLoss>,
}

/// Per-example momentum SGD. All randomness (initialization, epoch
/// shuffling, dropout, Gumbel noise) comes from one generator seeded with
/// `config.seed`.
pub fn train_examples(
    examples: &[TrainingExample],
    variant: Variant,
    embedding_dim: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::argument("empty training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = VerifierParams::new(variant, embedding_dim, config.hidden, &mut rng);
    let dropout = if variant.is_multitask() { 0.0 } else { config.dropout };

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut step: u64 = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = LossParts::default();
        for &i in &order {
            let mut opts = PassOptions {
                training: true,
                dropout,
                tau: config.tau,
                rng: Some(&mut rng),
                frozen_noise: None,
            };
            let (_, parts) = params.accumulate_gradients(&examples[i], &mut opts, config.lambda_utility)?;
            sum.claim += parts.claim;
            sum.utility += parts.utility;
            let mut layers = params.layers_mut();
            for layer in layers.iter_mut() {
                layer.add_l2(config.l2);
            }
            sgd_step(&mut layers, config, step);
            step += 1;
        }
        let n = examples.len() as f64;
        history.push(EpochLoss {
            epoch: epoch + 1,
            claim_loss: sum.claim / n,
            utility_loss: sum.utility / n,
        });
    }
    Ok(TrainOutcome { params, history })
}

/// Utility targets for a pool: 1 for sentences in any gold group.
pub fn utility_targets(claim: &AnnotatedClaim, pool: &EvidencePool) -> Vec<u8> {
    let gold = claim.gold_sentences();
    pool.candidates
        .iter()
        .map(|c| u8::from(!c.pad && gold.contains(&c.key())))
        .collect()
}

/// Encodes labeled claims against their pools. Every labeled claim must
/// have a pool of `k + m` slots.
pub fn training_examples(
    claims: &[AnnotatedClaim],
    pools: &[EvidencePool],
    table: &EmbeddingTable,
) -> Result<Vec<TrainingExample>> {
    let by_id: BTreeMap<&str, &EvidencePool> = pools.iter().map(|p| (p.claim_id.as_str(), p)).collect();
    let labeled: Vec<&AnnotatedClaim> = claims.iter().filter(|c| c.gold_label.is_some()).collect();
    let missing: Vec<&str> = labeled
        .iter()
        .filter(|c| !by_id.contains_key(c.claim_id.as_str()))
        .map(|c| c.claim_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!("no evidence pool for claims: {}", missing.join(", "))));
    }
    Ok(labeled
        .into_iter()
        .map(|c| {
            let pool = by_id[c.claim_id.as_str()];
            TrainingExample {
                input: EncodedInput::encode(c, pool, table),
                label: c.gold_label.expect("filtered to labeled claims"),
                utilities: Some(utility_targets(c, pool)),
            }
        })
        .collect())
}

pub fn train(
    claims: &[AnnotatedClaim],
    pools: &[EvidencePool],
    table: &EmbeddingTable,
    config: &TrainConfig,
    variant: Variant,
) -> Result<TrainOutcome> {
    let examples = training_examples(claims, pools, table)?;
    train_examples(&examples, variant, table.dim(), config)
}

/// Which pool entries a prediction reports as evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceMode {
    /// Everything retrieved.
    #[default]
    Raw,
    /// Only entries with P(useful) above [`UTILITY_THRESHOLD`].
    UtilityFiltered,
}

/// Eval-mode prediction. Gumbel noise for `MtGumbel` is drawn from a stream
/// derived from `seed` and the claim id.
pub fn predict(
    params: &VerifierParams,
    claim: &AnnotatedClaim,
    pool: &EvidencePool,
    table: &EmbeddingTable,
    mode: EvidenceMode,
    tau: f64,
    seed: u64,
) -> Result<Prediction> {
    if mode == EvidenceMode::UtilityFiltered && !params.variant.is_multitask() {
        return Err(Error::argument(format!(
            "utility filtering needs a multi-task model, got {}",
            params.variant
        )));
    }
    if table.dim() != params.embedding_dim {
        return Err(Error::argument(format!(
            "embedding dimension {} does not match model dimension {}",
            table.dim(),
            params.embedding_dim
        )));
    }
    let input = EncodedInput::encode(claim, pool, table);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, &claim.claim_id));
    let mut opts = PassOptions {
        tau,
        rng: (params.variant == Variant::MtGumbel).then_some(&mut rng),
        ..PassOptions::default()
    };
    let out = params.forward(&input, &mut opts)?;
    let label = out.label();
    let selected_evidence = pool
        .candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.pad)
        .filter(|(i, _)| match (mode, &out.utilities) {
            (EvidenceMode::UtilityFiltered, Some(u)) => u[*i] > UTILITY_THRESHOLD,
            _ => true,
        })
        .map(|(_, c)| c.key())
        .collect();
    Ok(Prediction {
        claim_id: claim.claim_id.clone(),
        label,
        label_probs: out.label_probs,
        utilities: out.utilities,
        selected_evidence,
    })
}

/// Prediction file line: the shape the scorer consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub claim_id: String,
    pub predicted_label: Label,
    pub predicted_evidence: Vec<EvidenceKey>,
}

impl From<&Prediction> for PredictionRecord {
    fn from(p: &Prediction) -> Self {
        PredictionRecord {
            claim_id: p.claim_id.clone(),
            predicted_label: p.label,
            predicted_evidence: p.selected_evidence.clone(),
        }
    }
}

pub const CHECKPOINT_FORMAT: &str = "frame-verifier-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const OUTER_PRODUCT_LAYOUT: &str = "row-major hidden x 2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Versioned JSON container of named layer tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub variant: Variant,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub outer_product_layout: String,
    pub config: TrainConfig,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn from_params(params: &VerifierParams, config: &TrainConfig) -> Self {
        let tensors = params
            .named_layers()
            .into_iter()
            .flat_map(|(name, l)| {
                [
                    Tensor {
                        name: format!("{name}.weight"),
                        shape: vec![l.outputs(), l.inputs()],
                        data: l.weights.clone(),
                    },
                    Tensor {
                        name: format!("{name}.bias"),
                        shape: vec![l.outputs()],
                        data: l.bias.clone(),
                    },
                ]
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            variant: params.variant,
            embedding_dim: params.embedding_dim,
            hidden: params.hidden,
            outer_product_layout: OUTER_PRODUCT_LAYOUT.into(),
            config: config.clone(),
            tensors,
        }
    }

    pub fn to_params(&self) -> Result<VerifierParams> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut params = VerifierParams::zeros(self.variant, self.embedding_dim, self.hidden);
        let by_name: BTreeMap<&str, &Tensor> = self.tensors.iter().map(|t| (t.name.as_str(), t)).collect();
        if by_name.len() != self.tensors.len() || by_name.len() != 2 * params.layers().len() {
            return Err(Error::Validation("checkpoint tensor set does not match the variant".into()));
        }
        let names: Vec<String> = params.named_layers().into_iter().map(|(n, _)| n).collect();
        for (name, layer) in names.iter().zip(params.layers_mut()) {
            let fetch = |suffix: &str, shape: Vec<usize>| -> Result<Vec<f64>> {
                let key = format!("{name}.{suffix}");
                let t = by_name
                    .get(key.as_str())
                    .ok_or_else(|| Error::Validation(format!("checkpoint lacks tensor {key}")))?;
                if t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                    return Err(Error::Validation(format!(
                        "tensor {key} has shape {:?}, expected {shape:?}",
                        t.shape
                    )));
                }
                Ok(t.data.clone())
            };
            layer.weights = fetch("weight", vec![layer.outputs(), layer.inputs()])?;
            layer.bias = fetch("bias", vec![layer.outputs()])?;
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}
