//! Small dense-network toolkit with hand-written backward passes.
//!
//! Everything works on `f64` slices. Matrices are row-major `out × in`.
//! Randomness always comes from a caller-supplied [`ChaCha8Rng`] so a single
//! seed determines an entire training run.

use rand::distributions::{Distribution, Open01, Uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer and model hyperparameters.
///
/// Defaults: momentum SGD with learning rate 0.01, learning-rate decay 1e-6
/// and momentum 0.9; L2 0.1; dropout 0.5 (plain verifiers only); 50 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub momentum: f64,
    pub l2: f64,
    pub dropout: f64,
    pub epochs: usize,
    /// Gumbel-Softmax temperature.
    pub tau: f64,
    /// Weight of the mean per-slot utility loss.
    pub lambda_utility: f64,
    pub seed: u64,
    pub k: usize,
    pub m: usize,
    /// Width of every hidden layer.
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            decay: 1e-6,
            momentum: 0.9,
            l2: 0.1,
            dropout: 0.5,
            epochs: 50,
            tau: 0.5,
            lambda_utility: 1.0,
            seed: 0,
            k: 3,
            m: 2,
            hidden: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::argument(format!("train config: {what}")));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(self.decay >= 0.0) {
            return bad("decay must be >= 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if !(self.l2 >= 0.0) {
            return bad("l2 must be >= 0");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.tau > 0.0) {
            return bad("tau must be > 0");
        }
        if !(self.lambda_utility >= 0.0) {
            return bad("lambda_utility must be >= 0");
        }
        if self.k + self.m == 0 {
            return bad("k + m must be at least 1");
        }
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        Ok(())
    }
}

/// Fully connected layer with its gradient and momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
    vel_weights: Vec<f64>,
    vel_bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            grad_weights: vec![0.0; inputs * outputs],
            grad_bias: vec![0.0; outputs],
            vel_weights: vec![0.0; inputs * outputs],
            vel_bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut layer = Self::zeros(inputs, outputs);
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        for w in &mut layer.weights {
            *w = dist.sample(rng);
        }
        layer
    }

    /// Builds a layer from explicit rows of `W` and `b`.
    pub fn from_rows(rows: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        let outputs = rows.len();
        let inputs = rows.first().map_or(0, Vec::len);
        if bias.len() != outputs || rows.iter().any(|r| r.len() != inputs) {
            return Err(Error::argument("inconsistent layer shapes"));
        }
        let mut layer = Self::zeros(inputs, outputs);
        layer.weights = rows.concat();
        layer.bias = bias;
        Ok(layer)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// `W x + b`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::argument(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        Ok(self
            .weights
            .chunks_exact(self.inputs.max(1))
            .take(self.outputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect())
    }

    /// Adds `grad_out ⊗ input` to the weight gradient and `grad_out` to the
    /// bias gradient.
    pub fn accumulate(&mut self, grad_out: &[f64], input: &[f64]) {
        debug_assert_eq!(grad_out.len(), self.outputs);
        debug_assert_eq!(input.len(), self.inputs);
        for (o, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &mut self.grad_weights[o * self.inputs..(o + 1) * self.inputs];
            for (gw, x) in row.iter_mut().zip(input) {
                *gw += g * x;
            }
            self.grad_bias[o] += g;
        }
    }

    /// `Wᵀ grad_out`.
    pub fn backward_input(&self, grad_out: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.inputs];
        for (o, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            for (d, w) in dx.iter_mut().zip(row) {
                *d += g * w;
            }
        }
        dx
    }

    /// Adds the gradient of `l2/2 · ‖W‖²` (biases are not regularized).
    pub fn add_l2(&mut self, l2: f64) {
        if l2 == 0.0 {
            return;
        }
        for (g, w) in self.grad_weights.iter_mut().zip(&self.weights) {
            *g += l2 * w;
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.iter_mut().for_each(|g| *g = 0.0);
        self.grad_bias.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<Vec<f64>> {
    layer.forward(x)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Gradient through ReLU given the layer *output*.
pub fn relu_backward(grad: &[f64], activated: &[f64]) -> Vec<f64> {
    grad.iter()
        .zip(activated)
        .map(|(&g, &a)| if a > 0.0 { g } else { 0.0 })
        .collect()
}

/// Max-shifted softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Vector-Jacobian product of softmax: given `p = softmax(y)` and `dL/dp`,
/// returns `dL/dy`.
pub fn softmax_backward(probs: &[f64], grad: &[f64]) -> Vec<f64> {
    let inner: f64 = probs.iter().zip(grad).map(|(p, g)| p * g).sum();
    probs.iter().zip(grad).map(|(p, g)| p * (g - inner)).collect()
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else
/// `1 / (1 - rate)`. All ones outside training.
pub fn dropout_mask(len: usize, rate: f64, training: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if !training || rate <= 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Standard Gumbel noise `-ln(-ln u)`, `u ~ U(0, 1)` open.
pub fn sample_gumbel(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let u: f64 = Open01.sample(rng);
            -(-u.ln()).ln()
        })
        .collect()
}

/// `softmax((logits + noise) / tau)` with caller-provided noise.
pub fn gumbel_softmax_with_noise(logits: &[f64], noise: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::argument(format!("gumbel temperature must be > 0, got {tau}")));
    }
    if noise.len() != logits.len() {
        return Err(Error::argument("gumbel noise length differs from logits"));
    }
    let scaled: Vec<f64> = logits.iter().zip(noise).map(|(l, g)| (l + g) / tau).collect();
    Ok(softmax(&scaled))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GumbelSample {
    pub probs: Vec<f64>,
    /// The drawn noise, kept so a backward pass can treat it as a constant.
    pub noise: Vec<f64>,
}

pub fn gumbel_softmax(logits: &[f64], tau: f64, rng: &mut ChaCha8Rng) -> Result<GumbelSample> {
    if !(tau > 0.0) {
        return Err(Error::argument(format!("gumbel temperature must be > 0, got {tau}")));
    }
    let noise = sample_gumbel(logits.len(), rng);
    let probs = gumbel_softmax_with_noise(logits, &noise, tau)?;
    Ok(GumbelSample { probs, noise })
}

pub const CE_FLOOR: f64 = 1e-12;

/// `-ln p[target]`, with `p` floored at 1e-12.
pub fn cross_entropy(pred: &[f64], target: usize) -> Result<f64> {
    let p = pred.get(target).ok_or_else(|| {
        Error::argument(format!("target class {target} out of range for {} classes", pred.len()))
    })?;
    Ok(-p.max(CE_FLOOR).ln())
}

/// Momentum SGD with `1 / (1 + decay · step)` learning-rate decay. Gradients
/// are expected to already include any L2 term; they are zeroed afterwards.
pub fn sgd_step(layers: &mut [&mut DenseLayer], config: &TrainConfig, step_count: u64) {
    let lr = config.learning_rate / (1.0 + config.decay * step_count as f64);
    let mu = config.momentum;
    for layer in layers.iter_mut() {
        let layer = &mut **layer;
        for ((w, v), g) in layer.weights.iter_mut().zip(&mut layer.vel_weights).zip(&layer.grad_weights) {
            *v = mu * *v - lr * g;
            *w += *v;
        }
        for ((b, v), g) in layer.bias.iter_mut().zip(&mut layer.vel_bias).zip(&layer.grad_bias) {
            *v = mu * *v - lr * g;
            *b += *v;
        }
        layer.zero_grad();
    }
}

/// Parameters of a layer stack as one flat vector (weights then bias, per layer).
pub fn flatten_params(layers: &[&DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}

pub fn flatten_grads(layers: &[&DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.grad_weights.iter().chain(&l.grad_bias).copied())
        .collect()
}

/// Inverse of [`flatten_params`].
pub fn assign_params(layers: &mut [&mut DenseLayer], values: &[f64]) -> Result<()> {
    let total: usize = layers.iter().map(|l| l.param_count()).sum();
    if total != values.len() {
        return Err(Error::argument(format!("expected {total} parameters, got {}", values.len())));
    }
    let mut at = 0;
    for layer in layers.iter_mut() {
        let nw = layer.weights.len();
        layer.weights.copy_from_slice(&values[at..at + nw]);
        at += nw;
        let nb = layer.bias.len();
        layer.bias.copy_from_slice(&values[at..at + nb]);
        at += nb;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares the analytic gradient returned by `f` at `params` against
/// central differences over every coordinate.
///
/// `f` maps a parameter vector to `(loss, gradient)` and must be
/// deterministic.
pub fn grad_check<F>(f: F, params: &[f64], epsilon: f64) -> GradCheck
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let coords: Vec<usize> = (0..params.len()).collect();
    grad_check_coords(f, params, epsilon, &coords)
}

/// [`grad_check`] restricted to the given coordinates.
pub fn grad_check_coords<F>(mut f: F, params: &[f64], epsilon: f64, coords: &[usize]) -> GradCheck
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(params);
    let mut probe = params.to_vec();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        checked: 0,
    };
    for &i in coords {
        let orig = probe[i];
        probe[i] = orig + epsilon;
        let (plus, _) = f(&probe);
        probe[i] = orig - epsilon;
        let (minus, _) = f(&probe);
        probe[i] = orig;

        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
        report.checked += 1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(17)
    }

    #[test]
    fn dense_forward_cases() {
        let id = DenseLayer::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(dense_forward(&id, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        let sum = DenseLayer::from_rows(&[vec![1.0, 1.0]], vec![1.0]).unwrap();
        assert_eq!(dense_forward(&sum, &[2.0, 3.0]).unwrap(), vec![6.0]);
        let wide = DenseLayer::zeros(3, 2);
        assert!(matches!(dense_forward(&wide, &[1.0, 2.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn relu_cases() {
        assert_eq!(relu(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(relu(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(relu(&[5.0]), vec![5.0]);
    }

    #[test]
    fn softmax_cases() {
        for p in softmax(&[0.0, 0.0, 0.0]) {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let big = softmax(&[1000.0, 0.0]);
        assert!(big.iter().all(|p| p.is_finite()));
        assert!((big[0] - 1.0).abs() < 1e-12 && big[1] < 1e-300);
        // exp(ln 2) = 2, so p = (2/3, 1/3)
        let p = softmax(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dropout_cases() {
        let mut r = rng();
        assert!(dropout_mask(100, 0.0, true, &mut r).iter().all(|&m| m == 1.0));
        assert!(dropout_mask(100, 0.9, false, &mut r).iter().all(|&m| m == 1.0));
        let mask = dropout_mask(1_000_000, 0.5, true, &mut r);
        let mean = mask.iter().sum::<f64>() / mask.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean mask {mean}");
        assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
    }

    #[test]
    fn gumbel_softmax_on_simplex() {
        let mut r = rng();
        for _ in 0..100 {
            let s = gumbel_softmax(&[0.3, -1.2, 2.0], 0.7, &mut r).unwrap();
            assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(s.noise.len(), 3);
        }
        assert!(gumbel_softmax(&[0.0, 1.0], 0.0, &mut r).is_err());
        assert!(gumbel_softmax(&[0.0, 1.0], -1.0, &mut r).is_err());
    }

    #[test]
    fn gumbel_with_zero_noise_is_tempered_softmax() {
        let p = gumbel_softmax_with_noise(&[1.0, 0.0], &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(p, softmax(&[2.0, 0.0]));
    }

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy(&[1.0, 0.0, 0.0], 0).unwrap(), 0.0);
        let third = 1.0 / 3.0;
        assert!((cross_entropy(&[third; 3], 1).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!(cross_entropy(&[third; 3], 5).is_err());
        assert!((cross_entropy(&[1.0, 0.0], 1).unwrap() - 1e12f64.ln()).abs() < 1e-9);
    }

    fn plain_gd() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.1,
            decay: 0.0,
            momentum: 0.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn sgd_zero_gradient_is_noop() {
        let mut layer = DenseLayer::glorot(3, 2, &mut rng());
        let before = layer.clone();
        sgd_step(&mut [&mut layer], &TrainConfig::default(), 0);
        assert_eq!(layer, before);
    }

    #[test]
    fn sgd_plain_descent() {
        let mut layer = DenseLayer::from_rows(&[vec![1.0, 2.0]], vec![0.5]).unwrap();
        layer.grad_weights = vec![1.0, -2.0];
        layer.grad_bias = vec![4.0];
        sgd_step(&mut [&mut layer], &plain_gd(), 0);
        assert!((layer.weights[0] - 0.9).abs() < 1e-15);
        assert!((layer.weights[1] - 2.2).abs() < 1e-15);
        assert!((layer.bias[0] - 0.1).abs() < 1e-15);
        assert_eq!(layer.grad_weights, vec![0.0, 0.0]);
    }

    #[test]
    fn sgd_momentum_unrolls() {
        // v1 = -lr g, v2 = 0.9 v1 - lr g = -1.9 lr g; total = -2.9 lr g
        let cfg = TrainConfig {
            momentum: 0.9,
            ..plain_gd()
        };
        let mut layer = DenseLayer::from_rows(&[vec![0.0]], vec![0.0]).unwrap();
        for step in 0..2 {
            layer.grad_weights = vec![2.0];
            sgd_step(&mut [&mut layer], &cfg, step);
        }
        assert!((layer.weights[0] - (-0.1 * 2.0 * 2.9)).abs() < 1e-12);
    }

    #[test]
    fn sgd_decay_shrinks_learning_rate() {
        let cfg = TrainConfig {
            decay: 1.0,
            ..plain_gd()
        };
        let mut layer = DenseLayer::from_rows(&[vec![0.0]], vec![0.0]).unwrap();
        layer.grad_weights = vec![1.0];
        sgd_step(&mut [&mut layer], &cfg, 3);
        assert!((layer.weights[0] + 0.1 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn l2_alone_shrinks_weights() {
        let mut layer = DenseLayer::glorot(4, 3, &mut rng());
        let cfg = TrainConfig::default();
        let mut norm = layer.weight_norm();
        for step in 0..5 {
            layer.add_l2(cfg.l2);
            sgd_step(&mut [&mut layer], &cfg, step);
            let next = layer.weight_norm();
            assert!(next < norm);
            norm = next;
        }
    }

    #[test]
    fn l2_gradient_matches_penalty() {
        let layer = DenseLayer::glorot(3, 2, &mut rng());
        let params = flatten_params(&[&layer]);
        let l2 = 0.1;
        let report = grad_check(
            |p| {
                let mut l = layer.clone();
                assign_params(&mut [&mut l], p).unwrap();
                let loss = 0.5 * l2 * l.weights.iter().map(|w| w * w).sum::<f64>();
                l.add_l2(l2);
                (loss, flatten_grads(&[&l]))
            },
            &params,
            1e-4,
        );
        assert!(report.max_rel_error < 1e-7, "{report:?}");
    }

    #[test]
    fn grad_check_quadratic() {
        // f(x) = Σ (i+1) x_i², ∇f = 2 (i+1) x_i
        let f = |x: &[f64]| {
            let loss = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum();
            let grad = x.iter().enumerate().map(|(i, v)| 2.0 * (i + 1) as f64 * v).collect();
            (loss, grad)
        };
        let report = grad_check(f, &[0.3, -1.5, 2.0, 0.7], 1e-4);
        assert!(report.max_rel_error < 1e-7, "{report:?}");
        assert_eq!(report.checked, 4);
    }

    #[test]
    fn grad_check_catches_corruption() {
        let f = |x: &[f64]| {
            let loss = x.iter().map(|v| v * v).sum();
            let mut grad: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            grad[1] *= 1.1;
            (loss, grad)
        };
        let report = grad_check(f, &[0.3, -1.5, 2.0], 1e-4);
        assert!(report.max_rel_error > 1e-2);
        assert_eq!(report.worst_index, 1);
    }

    #[test]
    fn dense_relu_stack_gradients() {
        let mut r = rng();
        let l1 = DenseLayer::glorot(4, 5, &mut r);
        let l2 = DenseLayer::glorot(5, 3, &mut r);
        let x = [0.5, -0.3, 0.8, 0.1];
        let params = flatten_params(&[&l1, &l2]);
        let report = grad_check(
            |p| {
                let (mut a, mut b) = (l1.clone(), l2.clone());
                assign_params(&mut [&mut a, &mut b], p).unwrap();
                let h = relu(&a.forward(&x).unwrap());
                let probs = softmax(&b.forward(&h).unwrap());
                let loss = cross_entropy(&probs, 2).unwrap();
                let mut dy = probs.clone();
                dy[2] -= 1.0;
                b.accumulate(&dy, &h);
                let dh = relu_backward(&b.backward_input(&dy), &h);
                a.accumulate(&dh, &x);
                (loss, flatten_grads(&[&a, &b]))
            },
            &params,
            1e-4,
        );
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn softmax_backward_matches_finite_differences() {
        let y = [0.4, -1.0, 2.5];
        let w = [0.3, -0.7, 1.1];
        let report = grad_check(
            |x| {
                let p = softmax(x);
                let loss = p.iter().zip(&w).map(|(a, b)| a * b).sum();
                (loss, softmax_backward(&p, &w))
            },
            &y,
            1e-5,
        );
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            tau: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            dropout: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
