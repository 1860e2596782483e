//! Independent reference implementations used as test oracles. Nothing here
//! calls into the code it checks.
#![allow(dead_code)]

use faceshape::{LandmarkSet, Point2D};
use rand::Rng;

/// The 19 feature formulas evaluated straight from raw coordinates (1-based point list).
pub fn feature_oracle(pts: &[(f64, f64); 19]) -> [f64; 19] {
    let p = |i: usize| pts[i - 1];
    let d = |a: usize, b: usize| {
        let (ax, ay) = p(a);
        let (bx, by) = p(b);
        ((ax - bx) * (ax - bx) + (ay - by) * (ay - by)).sqrt()
    };
    let mut f = [0.0; 19];
    f[0] = d(9, 18) / d(1, 17);
    f[1] = d(5, 13) / d(1, 17);
    f[2] = d(9, 19) / d(5, 13);
    let (cx, cy) = p(9);
    for i in 4..=11 {
        let (x, y) = p(i - 3);
        f[i - 1] = ((x - cx) / (y - cy)).atan();
    }
    for i in 12..=19 {
        let (x, y) = p(i - 2);
        f[i - 1] = ((x - cx) / (y - cy)).atan();
    }
    f
}

/// Random face: jaw points anywhere above the chin, hairline well above it.
pub fn random_face_coords<R: Rng>(rng: &mut R) -> [(f64, f64); 19] {
    let mut pts = [(0.0, 0.0); 19];
    let chin = (
        rng.random_range(150.0..250.0),
        rng.random_range(380.0..420.0),
    );
    for k in 1..=17 {
        let x = 20.0 + 360.0 * (k - 1) as f64 / 16.0 + rng.random_range(-8.0..8.0);
        let y = rng.random_range(150.0..360.0);
        pts[k - 1] = (x, y);
    }
    pts[8] = chin;
    pts[17] = (
        chin.0 + rng.random_range(-20.0..20.0),
        rng.random_range(0.0..100.0),
    );
    pts[18] = (
        chin.0 + rng.random_range(-5.0..5.0),
        chin.1 - rng.random_range(20.0..60.0),
    );
    pts
}

pub fn to_landmarks(pts: &[(f64, f64); 19]) -> LandmarkSet {
    LandmarkSet::new(pts.map(|(x, y)| Point2D::new(x, y))).expect("valid random face")
}

/// Naive k-NN: full sort by (distance, index), count the first k labels,
/// take the highest count with ties to the lowest class index.
pub fn brute_force_knn(
    train: &[Vec<f64>],
    labels: &[usize],
    query: &[f64],
    k: usize,
) -> (usize, [f64; 5]) {
    let mut all: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let d: f64 = t.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        })
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = [0.0; 5];
    for &(_, i) in all.iter().take(k) {
        votes[labels[i]] += 1.0;
    }
    let mut best = 0;
    for c in 1..5 {
        if votes[c] > votes[best] {
            best = c;
        }
    }
    (best, votes)
}

/// Population z-scoring of columns, computed directly.
pub fn zscore_columns(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let dim = rows[0].len();
    let mut mean = vec![0.0; dim];
    let mut std = vec![0.0; dim];
    for j in 0..dim {
        mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        std[j] = (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
    }
    (mean, std)
}

/// Largest KKT violation of an SVM dual solution, measured on `y f(x) - 1`
/// with `f` rebuilt from the multipliers and the kernel.
pub fn max_kkt_violation(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: &[f64],
    bias: f64,
    c: f64,
    kernel: impl Fn(&[f64], &[f64]) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let f: f64 = (0..x.len())
            .map(|j| alpha[j] * y[j] * kernel(&x[j], &x[i]))
            .sum::<f64>()
            + bias;
        let m = y[i] * f - 1.0;
        let v = if alpha[i] <= 0.0 {
            (-m).max(0.0)
        } else if alpha[i] >= c {
            m.max(0.0)
        } else {
            m.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Central finite-difference gradient.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
