//! Geometric features and z-score normalization.
//!
//! Each face yields 19 numbers:
//!
//! | index | value |
//! |-------|-------|
//! | f1 | face height over face width, `d(9,18) / d(1,17)` |
//! | f2 | jaw width over face width, `d(5,13) / d(1,17)` |
//! | f3 | chin-to-mouth over jaw width, `d(9,19) / d(5,13)` |
//! | f4..f11 | `atan(dx/dy)` from the chin to points 1..8 |
//! | f12..f19 | `atan(dx/dy)` from the chin to points 10..17 |
//!
//! Angles are measured from the vertical through the chin, in radians.

use std::fmt::Write as _;
use std::fs;
use std::ops::Index;
use std::path::Path;

use crate::error::{Error, Result};
use crate::landmarks::{Dataset, FaceShape, LandmarkSet, CHIN, HAIRLINE, MOUTH};

pub const NUM_FEATURES: usize = 19;

/// Below this |dy| an angle is taken as exactly horizontal.
const VERTICAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Landmark indices whose chin angles become f4..f19, in feature order.
pub const ANGLE_POINTS: [usize; 16] = [1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 16, 17];

pub fn extract_features(lm: &LandmarkSet) -> Result<FeatureVector> {
    if let Some(v) = lm.violations().into_iter().next() {
        return Err(Error::invalid(format!("invalid landmarks: {v}")));
    }
    let chin = lm.point(CHIN);
    let mut f = [0.0; NUM_FEATURES];
    let face_width = lm.distance(1, 17);
    let jaw_width = lm.distance(5, 13);
    f[0] = lm.distance(CHIN, HAIRLINE) / face_width;
    f[1] = jaw_width / face_width;
    f[2] = lm.distance(CHIN, MOUTH) / jaw_width;

    for (slot, &p) in f[3..].iter_mut().zip(ANGLE_POINTS.iter()) {
        let q = lm.point(p);
        if q.distance(&chin) < VERTICAL_EPS {
            return Err(Error::DegenerateLandmarks { point: p });
        }
        let (dx, dy) = (q.x - chin.x, q.y - chin.y);
        *slot = if dy.abs() < VERTICAL_EPS {
            if dx < 0.0 {
                -std::f64::consts::FRAC_PI_2
            } else {
                std::f64::consts::FRAC_PI_2
            }
        } else {
            (dx / dy).atan()
        };
    }
    Ok(FeatureVector(f))
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: [f64; NUM_FEATURES],
    pub std: [f64; NUM_FEATURES],
    /// Columns with zero spread; these normalize to 0.
    pub degenerate: Vec<usize>,
}

impl NormalizationStats {
    /// Rebuilds stats from stored moments, recomputing the degenerate set.
    pub fn from_parts(mean: [f64; NUM_FEATURES], std: [f64; NUM_FEATURES]) -> Result<Self> {
        if std.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) || mean.iter().any(|m| !m.is_finite())
        {
            return Err(Error::invalid(
                "normalization moments must be finite with std >= 0",
            ));
        }
        let degenerate = (0..NUM_FEATURES).filter(|&j| std[j] == 0.0).collect();
        Ok(Self {
            mean,
            std,
            degenerate,
        })
    }

    pub fn apply(&self, x: &FeatureVector) -> FeatureVector {
        let mut z = [0.0; NUM_FEATURES];
        for j in 0..NUM_FEATURES {
            z[j] = if self.std[j] == 0.0 {
                0.0
            } else {
                (x[j] - self.mean[j]) / self.std[j]
            };
        }
        FeatureVector(z)
    }
}

pub fn fit_normalizer(xs: &[FeatureVector]) -> Result<NormalizationStats> {
    if xs.is_empty() {
        return Err(Error::invalid("cannot fit a normalizer on zero samples"));
    }
    let n = xs.len() as f64;
    let mut mean = [0.0; NUM_FEATURES];
    for x in xs {
        for j in 0..NUM_FEATURES {
            mean[j] += x[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = [0.0; NUM_FEATURES];
    for x in xs {
        for j in 0..NUM_FEATURES {
            let d = x[j] - mean[j];
            std[j] += d * d;
        }
    }
    std.iter_mut().for_each(|s| *s = (*s / n).sqrt());
    // a constant column can pick up rounding residue in its mean; pin it
    for j in 0..NUM_FEATURES {
        if xs.iter().all(|x| x[j] == xs[0][j]) {
            mean[j] = xs[0][j];
            std[j] = 0.0;
        }
    }
    NormalizationStats::from_parts(mean, std)
}

pub fn apply_normalizer(stats: &NormalizationStats, x: &FeatureVector) -> FeatureVector {
    stats.apply(x)
}

/// One row of a feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub features: FeatureVector,
    pub label: Option<FaceShape>,
}

pub fn extract_dataset(ds: &Dataset) -> Result<Vec<FeatureRow>> {
    ds.iter()
        .map(|s| {
            let features = extract_features(&s.landmarks).map_err(|e| Error::Validation {
                id: s.id.clone(),
                detail: e.to_string(),
            })?;
            Ok(FeatureRow {
                id: s.id.clone(),
                features,
                label: s.label,
            })
        })
        .collect()
}

pub fn features_to_string(rows: &[FeatureRow]) -> String {
    let mut out = String::from("id");
    for j in 1..=NUM_FEATURES {
        let _ = write!(out, ",f{j}");
    }
    out.push_str(",label\n");
    for r in rows {
        out.push_str(&r.id);
        for v in r.features.as_slice() {
            let _ = write!(out, ",{v}");
        }
        out.push(',');
        if let Some(l) = r.label {
            out.push_str(l.name());
        }
        out.push('\n');
    }
    out
}

pub fn write_feature_file(rows: &[FeatureRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, features_to_string(rows)).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text)
}

/// Parses `id,f1..f19[,label]` rows after one header line.
pub fn parse_features(text: &str) -> Result<Vec<FeatureRow>> {
    let mut rows: Vec<FeatureRow> = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |detail: String| Error::Parse {
            line: line_no,
            detail,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != NUM_FEATURES + 1 && fields.len() != NUM_FEATURES + 2 {
            return Err(err(format!(
                "expected {} or {} fields, found {}",
                NUM_FEATURES + 1,
                NUM_FEATURES + 2,
                fields.len()
            )));
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(err("empty sample id".into()));
        }
        let mut f = [0.0; NUM_FEATURES];
        for (j, slot) in f.iter_mut().enumerate() {
            let v: f64 = fields[j + 1]
                .parse()
                .map_err(|e| err(format!("f{}: {e}", j + 1)))?;
            if !v.is_finite() {
                return Err(err(format!("f{} is not finite", j + 1)));
            }
            *slot = v;
        }
        let label = match fields.get(NUM_FEATURES + 1) {
            None | Some(&"") => None,
            Some(text) => Some(text.parse::<FaceShape>().map_err(err)?),
        };
        if !ids.insert(id.to_string()) {
            return Err(Error::Validation {
                id: id.to_string(),
                detail: "duplicate sample id".into(),
            });
        }
        rows.push(FeatureRow {
            id: id.to_string(),
            features: FeatureVector(f),
            label,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::Point2D;
    use std::f64::consts::FRAC_PI_4;

    fn face(overrides: &[(usize, Point2D)]) -> LandmarkSet {
        let mut pts = [Point2D::default(); 19];
        for k in 1..=17 {
            let t = (k as f64 - 9.0) / 8.0;
            pts[k - 1] = Point2D::new(
                100.0 + 50.0 * t,
                200.0 - 50.0 * (1.0 - (1.0 - t.abs()).powi(2)),
            );
        }
        pts[17] = Point2D::new(100.0, 100.0);
        pts[18] = Point2D::new(100.0, 170.0);
        for &(i, p) in overrides {
            pts[i - 1] = p;
        }
        LandmarkSet::new(pts).unwrap()
    }

    #[test]
    fn equal_height_and_width_give_unit_ratio() {
        let lm = face(&[
            (9, Point2D::new(100.0, 200.0)),
            (18, Point2D::new(100.0, 100.0)),
            (1, Point2D::new(50.0, 150.0)),
            (17, Point2D::new(150.0, 150.0)),
        ]);
        assert_eq!(extract_features(&lm).unwrap()[0], 1.0);
    }

    #[test]
    fn mirror_pair_has_opposite_angles() {
        let lm = face(&[
            (9, Point2D::new(100.0, 200.0)),
            (1, Point2D::new(0.0, 100.0)),
            (17, Point2D::new(200.0, 100.0)),
        ]);
        let f = extract_features(&lm).unwrap();
        assert!((f[3] - FRAC_PI_4).abs() < 1e-15);
        assert!((f[18] + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn level_jaw_point_is_horizontal() {
        let lm = face(&[
            (1, Point2D::new(40.0, 200.0)),
            (17, Point2D::new(160.0, 200.0)),
        ]);
        let f = extract_features(&lm).unwrap();
        assert_eq!(f[3], -std::f64::consts::FRAC_PI_2);
        assert_eq!(f[18], std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn jaw_point_on_chin_is_degenerate() {
        let lm = face(&[(8, Point2D::new(100.0, 200.0))]);
        assert!(matches!(
            extract_features(&lm),
            Err(Error::DegenerateLandmarks { point: 8 })
        ));
    }

    fn column(values: &[f64]) -> Vec<FeatureVector> {
        values
            .iter()
            .map(|&v| {
                let mut f = [0.0; NUM_FEATURES];
                f[0] = v;
                FeatureVector(f)
            })
            .collect()
    }

    #[test]
    fn population_std_of_one_two_three() {
        let stats = fit_normalizer(&column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(stats.mean[0], 2.0);
        assert!((stats.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let z = apply_normalizer(&stats, &column(&[1.0])[0]);
        assert!((z[0] + 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let stats = fit_normalizer(&column(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(stats.std[0], 0.0);
        assert!(stats.degenerate.contains(&0));
        assert_eq!(apply_normalizer(&stats, &column(&[5.0])[0])[0], 0.0);
    }

    #[test]
    fn single_sample_is_fully_degenerate() {
        let stats = fit_normalizer(&column(&[3.0])).unwrap();
        assert_eq!(stats.degenerate, (0..NUM_FEATURES).collect::<Vec<_>>());
    }

    #[test]
    fn mean_normalizes_to_zero() {
        let xs = column(&[1.0, 4.0, 9.0]);
        let stats = fit_normalizer(&xs).unwrap();
        let z = stats.apply(&FeatureVector(stats.mean));
        assert!(z.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_fit_is_invalid() {
        assert!(matches!(fit_normalizer(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn feature_file_round_trip() {
        let rows = vec![
            FeatureRow {
                id: "a".into(),
                features: FeatureVector([0.1; NUM_FEATURES]),
                label: Some(FaceShape::Oval),
            },
            FeatureRow {
                id: "b".into(),
                features: FeatureVector([-1.0 / 3.0; NUM_FEATURES]),
                label: None,
            },
        ];
        assert_eq!(parse_features(&features_to_string(&rows)).unwrap(), rows);
    }

    #[test]
    fn feature_rows_without_label_column_parse() {
        let mut line = String::from("x");
        for _ in 0..NUM_FEATURES {
            line.push_str(",1.5");
        }
        let rows = parse_features(&format!("hdr\n{line}\n")).unwrap();
        assert_eq!(rows[0].label, None);
        assert!(parse_features(&format!("hdr\n{line},1\n")).is_err());
    }
}
