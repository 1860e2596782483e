//! Brute-force k-nearest-neighbour voting.

use super::{argmax_lowest, squared_distance, Prediction, NUM_CLASSES};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::landmarks::FaceShape;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub points: Vec<[f64; NUM_FEATURES]>,
    pub labels: Vec<FaceShape>,
}

impl KnnParams {
    pub fn new(zs: &[FeatureVector], ys: &[FaceShape]) -> Self {
        Self {
            points: zs.iter().map(|z| z.0).collect(),
            labels: ys.to_vec(),
        }
    }

    /// Indices of the `k` nearest stored points; equal distances keep
    /// training order.
    pub fn neighbours(&self, z: &FeatureVector, k: usize) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (squared_distance(p, z.as_slice()), i))
            .collect();
        let k = k.min(order.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < order.len() {
            order.select_nth_unstable_by(k, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        order.into_iter().map(|(_, i)| i).collect()
    }

    pub(crate) fn predict(&self, z: &FeatureVector, k: usize) -> Prediction {
        let mut scores = [0.0; NUM_CLASSES];
        for i in self.neighbours(z, k) {
            scores[self.labels[i].index()] += 1.0;
        }
        Prediction {
            label: argmax_lowest(&scores),
            scores,
        }
    }
}
