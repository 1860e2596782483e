//! Fully connected network with ReLU hidden layers and a softmax output,
//! trained with L-BFGS on mean cross-entropy plus an L2 weight penalty.
//!
//! Parameters are stored flat, layer by layer: each layer's weight matrix
//! (`outputs x inputs`, row-major) followed by its bias vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmax_lowest, Prediction, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::landmarks::FaceShape;
use crate::optim::{minimize, LbfgsConfig, ObjectiveEvaluation, Status};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    /// Layer widths from input to output, e.g. `[19, 5, 2, 5]`.
    pub sizes: Vec<usize>,
    pub flat: Vec<f64>,
}

/// Layer widths for the given hidden layers.
pub fn architecture(hidden: &[usize]) -> Vec<usize> {
    let mut sizes = vec![NUM_FEATURES];
    sizes.extend_from_slice(hidden);
    sizes.push(NUM_CLASSES);
    sizes
}

pub fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Runs the network, keeping every layer's pre-activation.
fn forward(sizes: &[usize], params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
    let mut pre = Vec::with_capacity(sizes.len() - 1);
    let mut input: Vec<f64> = x.to_vec();
    let mut off = 0;
    let last = sizes.len() - 2;
    for (l, w) in sizes.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = &params[off..off + n_in * n_out];
        let bias = &params[off + n_in * n_out..off + n_in * n_out + n_out];
        off += n_in * n_out + n_out;
        let z: Vec<f64> = (0..n_out)
            .map(|o| {
                bias[o]
                    + weights[o * n_in..(o + 1) * n_in]
                        .iter()
                        .zip(&input)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        input = if l == last {
            z.clone()
        } else {
            z.iter().map(|v| v.max(0.0)).collect()
        };
        pre.push(z);
    }
    pre
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - lse).collect()
}

/// Mean softmax cross-entropy plus `l2/2 * ||W||^2` (biases unpenalized),
/// with its exact gradient.
pub fn mlp_loss_grad(
    sizes: &[usize],
    params: &[f64],
    xs: &[FeatureVector],
    ys: &[FaceShape],
    l2: f64,
) -> Result<ObjectiveEvaluation> {
    if sizes.len() < 2 || sizes[0] != NUM_FEATURES || *sizes.last().unwrap() != NUM_CLASSES {
        return Err(Error::invalid("network must map 19 features to 5 classes"));
    }
    if params.len() != parameter_count(sizes) {
        return Err(Error::invalid(format!(
            "expected {} parameters, got {}",
            parameter_count(sizes),
            params.len()
        )));
    }
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::invalid("need matching, nonempty samples and labels"));
    }
    let n = xs.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;

    // offsets of each layer's weights
    let mut offsets = Vec::with_capacity(sizes.len() - 1);
    let mut off = 0;
    for w in sizes.windows(2) {
        offsets.push(off);
        off += w[0] * w[1] + w[1];
    }

    for (x, y) in xs.iter().zip(ys) {
        let pre = forward(sizes, params, x.as_slice());
        let logp = log_softmax(pre.last().unwrap());
        loss -= logp[y.index()];
        let mut delta: Vec<f64> = logp.iter().map(|lp| lp.exp() / n).collect();
        delta[y.index()] -= 1.0 / n;

        for l in (0..sizes.len() - 1).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let base = offsets[l];
            let input: Vec<f64> = if l == 0 {
                x.as_slice().to_vec()
            } else {
                pre[l - 1].iter().map(|v| v.max(0.0)).collect()
            };
            for o in 0..n_out {
                let row = base + o * n_in;
                for i in 0..n_in {
                    grad[row + i] += delta[o] * input[i];
                }
                grad[base + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let mut back = vec![0.0; n_in];
                for o in 0..n_out {
                    let row = base + o * n_in;
                    for i in 0..n_in {
                        back[i] += params[row + i] * delta[o];
                    }
                }
                for (b, z) in back.iter_mut().zip(&pre[l - 1]) {
                    if *z <= 0.0 {
                        *b = 0.0;
                    }
                }
                delta = back;
            }
        }
    }
    loss /= n;

    if l2 > 0.0 {
        for (l, w) in sizes.windows(2).enumerate() {
            let base = offsets[l];
            for k in base..base + w[0] * w[1] {
                loss += 0.5 * l2 * params[k] * params[k];
                grad[k] += l2 * params[k];
            }
        }
    }
    Ok(ObjectiveEvaluation {
        value: loss,
        gradient: grad,
    })
}

/// Uniform `(-0.5, 0.5) * sqrt(6 / (fan_in + fan_out))` for weights and biases.
pub fn initial_parameters(sizes: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(parameter_count(sizes));
    for w in sizes.windows(2) {
        let scale = (6.0 / (w[0] + w[1]) as f64).sqrt();
        for _ in 0..w[0] * w[1] + w[1] {
            out.push((rng.random::<f64>() - 0.5) * scale);
        }
    }
    out
}

pub(crate) fn fit(
    zs: &[FeatureVector],
    ys: &[FaceShape],
    hidden: &[usize],
    l2: f64,
    seed: u64,
) -> Result<(MlpParams, Status)> {
    let sizes = architecture(hidden);
    let x0 = initial_parameters(&sizes, seed);
    let objective = |p: &[f64]| {
        mlp_loss_grad(&sizes, p, zs, ys, l2).expect("shapes validated before minimizing")
    };
    let min = minimize(objective, &x0, &LbfgsConfig::default())?;
    Ok((MlpParams { sizes, flat: min.x }, min.status))
}

impl MlpParams {
    pub fn probabilities(&self, z: &FeatureVector) -> [f64; NUM_CLASSES] {
        let pre = forward(&self.sizes, &self.flat, z.as_slice());
        let logits = pre.last().expect("at least one layer");
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = [0.0; NUM_CLASSES];
        for (pi, v) in p.iter_mut().zip(logits) {
            *pi = (v - max).exp();
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        p
    }

    pub(crate) fn predict(&self, z: &FeatureVector) -> Prediction {
        let scores = self.probabilities(z);
        Prediction {
            label: argmax_lowest(&scores),
            scores,
        }
    }
}
