//! Seeded synthetic landmark datasets.
//!
//! Each class has a frozen template face 200 px wide. The jaw contour is the
//! lower half of a superellipse whose exponent is chosen so that points 5 and
//! 13 sit at the requested jaw-to-face width ratio:
//!
//! | class  | height/width | jaw/width | jaw depth (px) | chin-to-mouth (px) |
//! |--------|--------------|-----------|----------------|--------------------|
//! | heart  | 1.2          | 0.60      | 120            | 40                 |
//! | oblong | 1.5          | 0.80      | 150            | 56                 |
//! | oval   | 1.5          | 0.80      | 110            | 44                 |
//! | round  | 1.0          | 0.80      | 90             | 36                 |
//! | square | 1.2          | 0.95      | 100            | 40                 |
//!
//! Jaw depth is the vertical drop from the ear line (points 1 and 17) to the
//! chin. Samples add i.i.d. Gaussian jitter to every coordinate and are
//! redrawn when the jittered face is implausible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::landmarks::{
    landmark_problems, Dataset, FaceShape, LandmarkSet, Point2D, Sample, ValidationConfig, CHIN,
    HAIRLINE, MOUTH, NUM_POINTS,
};

pub const FACE_WIDTH: f64 = 200.0;
const CENTER_X: f64 = 250.0;
const EAR_Y: f64 = 250.0;
/// Redraws allowed per sample after the first attempt.
pub const MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeTemplate {
    pub height_ratio: f64,
    pub jaw_ratio: f64,
    pub jaw_depth: f64,
    pub mouth_offset: f64,
}

impl ShapeTemplate {
    pub fn for_shape(shape: FaceShape) -> Self {
        let (height_ratio, jaw_ratio, jaw_depth, mouth_offset) = match shape {
            FaceShape::Heart => (1.2, 0.6, 120.0, 40.0),
            FaceShape::Oblong => (1.5, 0.8, 150.0, 56.0),
            FaceShape::Oval => (1.5, 0.8, 110.0, 44.0),
            FaceShape::Round => (1.0, 0.8, 90.0, 36.0),
            FaceShape::Square => (1.2, 0.95, 100.0, 40.0),
        };
        Self {
            height_ratio,
            jaw_ratio,
            jaw_depth,
            mouth_offset,
        }
    }

    pub fn points(&self) -> [Point2D; NUM_POINTS] {
        let half = FACE_WIDTH / 2.0;
        // |cos(pi/4)|^e == jaw_ratio
        let e = self.jaw_ratio.ln() / std::f64::consts::FRAC_1_SQRT_2.ln();
        let chin_y = EAR_Y + self.jaw_depth;
        let mut pts = [Point2D::default(); NUM_POINTS];
        for k in 1..=17 {
            let phi = std::f64::consts::PI * (k - 1) as f64 / 16.0;
            let (c, s) = (phi.cos(), phi.sin());
            pts[k - 1] = Point2D::new(
                CENTER_X - half * c.signum() * c.abs().powf(e),
                EAR_Y + self.jaw_depth * s.abs().powf(e),
            );
        }
        pts[0] = Point2D::new(CENTER_X - half, EAR_Y);
        pts[16] = Point2D::new(CENTER_X + half, EAR_Y);
        pts[CHIN - 1] = Point2D::new(CENTER_X, chin_y);
        pts[HAIRLINE - 1] = Point2D::new(CENTER_X, chin_y - self.height_ratio * FACE_WIDTH);
        pts[MOUTH - 1] = Point2D::new(CENTER_X, chin_y - self.mouth_offset);
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub per_class: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// A jittered face is kept only if it is a valid landmark set, level within
/// the default roll limit, and has the chin between the two ear points.
fn plausible(lm: &LandmarkSet) -> bool {
    let (l, chin, r) = (lm.point(1), lm.point(CHIN), lm.point(17));
    landmark_problems(lm, &ValidationConfig::default()).is_empty() && l.x < chin.x && chin.x < r.x
}

/// Samples are interleaved by class: heart, oblong, oval, round, square, heart, ...
pub fn synth_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    if cfg.per_class == 0 {
        return Err(Error::invalid("per_class must be >= 1"));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(Error::invalid("noise_sigma must be finite and >= 0"));
    }
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let templates = FaceShape::ALL.map(|c| ShapeTemplate::for_shape(c).points());

    let mut samples = Vec::with_capacity(cfg.per_class * FaceShape::COUNT);
    for j in 0..cfg.per_class {
        for class in FaceShape::ALL {
            let base = &templates[class.index()];
            let mut drawn = None;
            for _ in 0..=MAX_RETRIES {
                let pts = base.map(|p| {
                    Point2D::new(p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng))
                });
                let lm = LandmarkSet::new_unchecked(pts);
                if plausible(&lm) {
                    drawn = Some(lm);
                    break;
                }
            }
            let landmarks = drawn.ok_or_else(|| Error::GenerationFailed {
                class: class.name().into(),
                retries: MAX_RETRIES,
            })?;
            samples.push(Sample {
                id: format!("synth-{:05}", j * FaceShape::COUNT + class.index()),
                landmarks,
                label: Some(class),
            });
        }
    }
    Dataset::new(
        samples,
        format!(
            "synthetic: per_class={} noise_sigma={} seed={}",
            cfg.per_class, cfg.noise_sigma, cfg.seed
        ),
    )
}
