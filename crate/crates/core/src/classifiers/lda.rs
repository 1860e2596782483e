//! Fisher discriminant projection followed by nearest-centroid assignment.
//!
//! The projection solves `S_b w = λ S_w w` by whitening with the Cholesky
//! factor of the (slightly ridged) within-class scatter, then taking the
//! leading eigenvectors of the symmetric whitened between-class scatter.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{argmax_lowest, Prediction, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::landmarks::FaceShape;

/// Ridge added to `S_w`, relative to its mean diagonal entry.
pub const WITHIN_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    /// `NUM_FEATURES x components`, row-major.
    pub projection: Vec<f64>,
    pub components: usize,
    /// Projected class means; `None` for classes absent from training.
    pub centroids: [Option<Vec<f64>>; NUM_CLASSES],
}

/// Within- and between-class scatter of `zs`.
pub fn scatter_matrices(zs: &[FeatureVector], ys: &[FaceShape]) -> (DMatrix<f64>, DMatrix<f64>) {
    let (means, counts) = class_means(zs, ys);
    let n = zs.len() as f64;
    let mut overall = DVector::zeros(NUM_FEATURES);
    for z in zs {
        overall += DVector::from_column_slice(z.as_slice());
    }
    overall /= n;

    let mut within = DMatrix::zeros(NUM_FEATURES, NUM_FEATURES);
    for (z, y) in zs.iter().zip(ys) {
        let d = DVector::from_column_slice(z.as_slice()) - &means[y.index()];
        within.ger(1.0, &d, &d, 1.0);
    }
    let mut between = DMatrix::zeros(NUM_FEATURES, NUM_FEATURES);
    for c in 0..NUM_CLASSES {
        if counts[c] > 0 {
            let d = &means[c] - &overall;
            between.ger(counts[c] as f64, &d, &d, 1.0);
        }
    }
    (within, between)
}

fn class_means(
    zs: &[FeatureVector],
    ys: &[FaceShape],
) -> (Vec<DVector<f64>>, [usize; NUM_CLASSES]) {
    let mut sums = vec![DVector::zeros(NUM_FEATURES); NUM_CLASSES];
    let mut counts = [0usize; NUM_CLASSES];
    for (z, y) in zs.iter().zip(ys) {
        sums[y.index()] += DVector::from_column_slice(z.as_slice());
        counts[y.index()] += 1;
    }
    for c in 0..NUM_CLASSES {
        if counts[c] > 0 {
            sums[c] /= counts[c] as f64;
        }
    }
    (sums, counts)
}

pub(crate) fn fit(zs: &[FeatureVector], ys: &[FaceShape], components: usize) -> Result<LdaParams> {
    let (mut within, between) = scatter_matrices(zs, ys);
    let trace = within.trace();
    let ridge = if trace > 0.0 {
        WITHIN_RIDGE * trace / NUM_FEATURES as f64
    } else {
        WITHIN_RIDGE
    };
    for i in 0..NUM_FEATURES {
        within[(i, i)] += ridge;
    }
    let chol = within
        .cholesky()
        .ok_or_else(|| Error::invalid("within-class scatter is not positive definite"))?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(NUM_FEATURES, NUM_FEATURES))
        .ok_or(Error::NumericalFailure)?;
    let mut whitened = &l_inv * between * l_inv.transpose();
    whitened = (&whitened + whitened.transpose()) * 0.5;
    let eig = SymmetricEigen::new(whitened);

    let mut order: Vec<usize> = (0..NUM_FEATURES).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let back = l_inv.transpose();
    let mut projection = vec![0.0; NUM_FEATURES * components];
    for (col, &e) in order.iter().take(components).enumerate() {
        let mut w = &back * eig.eigenvectors.column(e);
        // fix the sign so the largest-magnitude entry is positive
        let pivot = w
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            w.neg_mut();
        }
        for r in 0..NUM_FEATURES {
            projection[r * components + col] = w[r];
        }
    }
    if projection.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure);
    }

    let mut params = LdaParams {
        projection,
        components,
        centroids: Default::default(),
    };
    let (means, counts) = class_means(zs, ys);
    for c in 0..NUM_CLASSES {
        if counts[c] > 0 {
            params.centroids[c] = Some(params.project_slice(means[c].as_slice()));
        }
    }
    Ok(params)
}

impl LdaParams {
    pub fn project(&self, z: &FeatureVector) -> Vec<f64> {
        self.project_slice(z.as_slice())
    }

    fn project_slice(&self, z: &[f64]) -> Vec<f64> {
        let k = self.components;
        let mut out = vec![0.0; k];
        for (r, zr) in z.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += zr * self.projection[r * k + c];
            }
        }
        out
    }

    pub(crate) fn predict(&self, z: &FeatureVector) -> Prediction {
        let p = self.project(z);
        let mut scores = [f64::NEG_INFINITY; NUM_CLASSES];
        for (c, centroid) in self.centroids.iter().enumerate() {
            if let Some(m) = centroid {
                scores[c] = -super::squared_distance(&p, m).sqrt();
            }
        }
        Prediction {
            label: argmax_lowest(&scores),
            scores,
        }
    }
}
