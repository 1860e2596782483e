//! Soft-margin SVM trained by sequential minimal optimization, combined
//! one-vs-one for the five classes.
//!
//! The binary solver works on the dual
//!
//! ```text
//! min  1/2 a'Qa - e'a    s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! and picks the maximal violating pair at each step. It stops once the
//! pair's KKT gap falls below [`KKT_TOL`].

use super::{squared_distance, ClassifierConfig, ClassifierKind, Prediction, NUM_CLASSES};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::landmarks::FaceShape;

pub const KKT_TOL: f64 = 1e-3;
pub const MAX_ITERATIONS: usize = 100_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn for_config(cfg: &ClassifierConfig) -> Self {
        match cfg.kind {
            ClassifierKind::SvmRbf => Kernel::Rbf {
                gamma: cfg.rbf_gamma,
            },
            _ => Kernel::Linear,
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves one binary problem. `y` holds +1/-1 labels.
pub fn solve_binary(x: &[&[f64]], y: &[f64], kernel: Kernel, c: f64) -> BinarySolution {
    solve_binary_with(x, y, kernel, c, KKT_TOL, MAX_ITERATIONS)
}

pub fn solve_binary_with(
    x: &[&[f64]],
    y: &[f64],
    kernel: Kernel,
    c: f64,
    tol: f64,
    max_iterations: usize,
) -> BinarySolution {
    let n = x.len();
    assert_eq!(n, y.len(), "one label per point");
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = y[i] * y[j] * kernel.eval(x[i], x[j]);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let is_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut i = usize::MAX;
        let mut up = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if is_up(alpha[t], y[t]) && v > up {
                up = v;
                i = t;
            }
            if is_low(alpha[t], y[t]) && v < low {
                low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || up - low < tol {
            converged = true;
            break;
        }
        if iterations == max_iterations {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q[i * n + i], q[j * n + j], q[i * n + j]);
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
        }
    }

    BinarySolution {
        bias: bias_from_gradient(&alpha, &grad, y, c),
        alpha,
        iterations,
        converged,
    }
}

/// Mean of `-y_i G_i` over free multipliers, or the midpoint of the feasible
/// interval when every multiplier sits at a bound.
fn bias_from_gradient(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free += 1;
        } else {
            // at a bound, the point constrains b from one side only
            let at_upper = alpha[t] >= c;
            if (y[t] > 0.0) != at_upper {
                lower = lower.max(v);
            } else {
                upper = upper.min(v);
            }
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else if upper.is_finite() {
        upper
    } else {
        0.0
    }
}

/// One pairwise machine: positive class `pos`, negative class `neg`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMachine {
    pub pos: FaceShape,
    pub neg: FaceShape,
    /// `alpha_i * y_i` for each support vector.
    pub coef: Vec<f64>,
    pub support: Vec<[f64; NUM_FEATURES]>,
    pub bias: f64,
}

impl BinaryMachine {
    pub fn decision(&self, kernel: Kernel, z: &[f64]) -> f64 {
        self.coef
            .iter()
            .zip(&self.support)
            .map(|(a, s)| a * kernel.eval(s, z))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub machines: Vec<BinaryMachine>,
}

/// Trains one machine per pair of classes present in `ys`. Also returns the
/// first pair whose solver hit the iteration cap, if any.
pub(crate) fn fit_one_vs_one(
    zs: &[FeatureVector],
    ys: &[FaceShape],
    kernel: Kernel,
    c: f64,
) -> (SvmParams, Option<(usize, usize, usize)>) {
    let mut present = [false; NUM_CLASSES];
    for y in ys {
        present[y.index()] = true;
    }
    let mut machines = Vec::new();
    let mut failure = None;
    for a in 0..NUM_CLASSES {
        for b in a + 1..NUM_CLASSES {
            if !(present[a] && present[b]) {
                continue;
            }
            let idx: Vec<usize> = (0..ys.len())
                .filter(|&i| ys[i].index() == a || ys[i].index() == b)
                .collect();
            let x: Vec<&[f64]> = idx.iter().map(|&i| zs[i].as_slice()).collect();
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| if ys[i].index() == a { 1.0 } else { -1.0 })
                .collect();
            let sol = solve_binary(&x, &y, kernel, c);
            if !sol.converged && failure.is_none() {
                failure = Some((a, b, sol.iterations));
            }
            let mut coef = Vec::new();
            let mut support = Vec::new();
            for (k, &i) in idx.iter().enumerate() {
                if sol.alpha[k] > 0.0 {
                    coef.push(sol.alpha[k] * y[k]);
                    support.push(zs[i].0);
                }
            }
            machines.push(BinaryMachine {
                pos: FaceShape::from_index(a).expect("class index"),
                neg: FaceShape::from_index(b).expect("class index"),
                coef,
                support,
                bias: sol.bias,
            });
        }
    }
    (SvmParams { kernel, machines }, failure)
}

impl SvmParams {
    pub(crate) fn predict(&self, z: &FeatureVector) -> Prediction {
        let mut votes = [0.0; NUM_CLASSES];
        let mut margin = [0.0; NUM_CLASSES];
        for m in &self.machines {
            let d = m.decision(self.kernel, z.as_slice());
            if d > 0.0 {
                votes[m.pos.index()] += 1.0;
            } else {
                votes[m.neg.index()] += 1.0;
            }
            margin[m.pos.index()] += d;
            margin[m.neg.index()] -= d;
        }
        let mut best = 0;
        for c in 1..NUM_CLASSES {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]) {
                best = c;
            }
        }
        Prediction {
            label: FaceShape::from_index(best).expect("class index"),
            scores: votes,
        }
    }
}
