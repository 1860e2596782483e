mod common;

use faceshape::features::{features_to_string, parse_features, FeatureRow, NUM_FEATURES};
use faceshape::{apply_normalizer, extract_features, fit_normalizer, FaceShape, FeatureVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn features(rows: &[[f64; NUM_FEATURES]]) -> Vec<FeatureVector> {
    rows.iter().map(|r| FeatureVector(*r)).collect()
}

proptest! {
    #[test]
    fn features_ignore_scale_and_translation(
        seed in any::<u64>(),
        scale in 1e-3f64..1e3,
        tx in -1e4f64..1e4,
        ty in -1e4f64..1e4,
    ) {
        let face = common::random_face_coords(&mut ChaCha8Rng::seed_from_u64(seed));
        let base = extract_features(&common::to_landmarks(&face)).unwrap();
        let moved = face.map(|(x, y)| (scale * x + tx, scale * y + ty));
        let f = extract_features(&common::to_landmarks(&moved)).unwrap();
        for j in 0..NUM_FEATURES {
            prop_assert!((f[j] - base[j]).abs() <= 1e-9, "feature {} moved by {}", j + 1, f[j] - base[j]);
        }
    }

    #[test]
    fn features_match_the_formula_table(seed in any::<u64>()) {
        let face = common::random_face_coords(&mut ChaCha8Rng::seed_from_u64(seed));
        let f = extract_features(&common::to_landmarks(&face)).unwrap();
        let want = common::feature_oracle(&face);
        for j in 0..NUM_FEATURES {
            prop_assert!((f[j] - want[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalized_training_columns_are_standard(
        rows in prop::collection::vec(prop::array::uniform19(-1e3f64..1e3), 2..40),
    ) {
        let xs = features(&rows);
        let stats = fit_normalizer(&xs).unwrap();
        let raw: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        let (mean, std) = common::zscore_columns(&raw);
        let zs: Vec<FeatureVector> = xs.iter().map(|x| apply_normalizer(&stats, x)).collect();
        for j in 0..NUM_FEATURES {
            prop_assert!((stats.mean[j] - mean[j]).abs() <= 1e-9 * mean[j].abs().max(1.0));
            if std[j] > 1e-9 {
                for (z, x) in zs.iter().zip(&raw) {
                    prop_assert!((z[j] - (x[j] - mean[j]) / std[j]).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn constant_columns_normalize_to_zero(value in -1e3f64..1e3, n in 1usize..10, col in 0usize..NUM_FEATURES) {
        let xs: Vec<FeatureVector> = (0..n)
            .map(|i| FeatureVector(std::array::from_fn(|j| if j == col { value } else { i as f64 * (j + 1) as f64 })))
            .collect();
        let stats = fit_normalizer(&xs).unwrap();
        prop_assert!(stats.degenerate.contains(&col));
        for x in &xs {
            prop_assert_eq!(apply_normalizer(&stats, x)[col], 0.0);
        }
    }

    #[test]
    fn feature_file_round_trip(rows in prop::collection::vec(prop::array::uniform19(-10f64..10.0), 1..10)) {
        let rows: Vec<FeatureRow> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| FeatureRow {
                id: format!("r{i}"),
                features: FeatureVector(*r),
                label: (i % 2 == 0).then(|| FaceShape::ALL[i % 5]),
            })
            .collect();
        let back = parse_features(&features_to_string(&rows)).unwrap();
        prop_assert_eq!(back, rows);
    }
}

#[test]
fn empty_training_set_cannot_be_normalized() {
    assert!(fit_normalizer(&[]).is_err());
}
