//! The 19-point facial landmark model and its text formats.
//!
//! Points are numbered 1..=19: 1-17 trace the jaw contour from the left ear to
//! the right ear (9 is the chin), 18 is the top of the hairline and 19 is the
//! mouth reference point below the lower lip. Coordinates are image pixels
//! with y growing downward.
//!
//! Two row formats are read:
//!
//! * native-19: `id,label,x1,y1,...,x19,y19`
//! * detector-68+hairline: `id,label,hx,hy,x0,y0,...,x67,y67`, where the 68
//!   points follow the common 68-point annotation layout. Jaw indices 0..=16
//!   become points 1..=17, the hairline becomes point 18 and lower-lip-bottom
//!   index 57 becomes point 19.
//!
//! Both formats start with one header line. The label may be empty.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const NUM_POINTS: usize = 19;
pub const CHIN: usize = 9;
pub const HAIRLINE: usize = 18;
pub const MOUTH: usize = 19;

/// Detector index used for model point 19.
pub const DETECTOR_MOUTH_INDEX: usize = 57;
const DETECTOR_POINTS: usize = 68;

/// Default roll tolerance for [`validate_dataset`], in degrees.
pub const DEFAULT_ROLL_LIMIT_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ways a set of 19 points can fail to describe a usable face.
#[derive(Debug, Clone, PartialEq)]
pub enum LandmarkViolation {
    NonFinite { point: usize },
    HairlineNotAboveChin { hairline_y: f64, chin_y: f64 },
    ZeroFaceWidth,
    ZeroJawWidth,
    RollExceeded { degrees: f64, limit: f64 },
}

impl fmt::Display for LandmarkViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite { point } => write!(f, "point {point} is not finite"),
            Self::HairlineNotAboveChin { hairline_y, chin_y } => {
                write!(f, "hairline y={hairline_y} is not above chin y={chin_y}")
            }
            Self::ZeroFaceWidth => f.write_str("face width d(1,17) is zero"),
            Self::ZeroJawWidth => f.write_str("jaw width d(5,13) is zero"),
            Self::RollExceeded { degrees, limit } => {
                write!(f, "roll angle {degrees:.2} deg exceeds limit {limit} deg")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: [Point2D; NUM_POINTS],
}

impl LandmarkSet {
    /// Builds a landmark set, rejecting anything that breaks the model invariants.
    pub fn new(points: [Point2D; NUM_POINTS]) -> std::result::Result<Self, LandmarkViolation> {
        let set = Self { points };
        match set.violations().into_iter().next() {
            Some(v) => Err(v),
            None => Ok(set),
        }
    }

    /// Builds a landmark set without checking invariants. Use
    /// [`LandmarkSet::violations`] or [`validate_dataset`] to inspect it.
    pub fn new_unchecked(points: [Point2D; NUM_POINTS]) -> Self {
        Self { points }
    }

    /// Point by its 1-based model index.
    ///
    /// Panics if `index` is not in `1..=19`.
    pub fn point(&self, index: usize) -> Point2D {
        assert!(
            (1..=NUM_POINTS).contains(&index),
            "landmark index {index} out of range"
        );
        self.points[index - 1]
    }

    pub fn points(&self) -> &[Point2D; NUM_POINTS] {
        &self.points
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.point(a).distance(&self.point(b))
    }

    /// Angle of the segment from point 1 to point 17 against the horizontal,
    /// in degrees, in `[0, 180]`. A level, correctly ordered face gives 0.
    pub fn roll_degrees(&self) -> f64 {
        let (l, r) = (self.point(1), self.point(17));
        (r.y - l.y).atan2(r.x - l.x).abs().to_degrees()
    }

    pub fn violations(&self) -> Vec<LandmarkViolation> {
        let mut out = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            if !p.is_finite() {
                out.push(LandmarkViolation::NonFinite { point: i + 1 });
            }
        }
        if !out.is_empty() {
            return out;
        }
        let (hair, chin) = (self.point(HAIRLINE), self.point(CHIN));
        if !(hair.y < chin.y) {
            out.push(LandmarkViolation::HairlineNotAboveChin {
                hairline_y: hair.y,
                chin_y: chin.y,
            });
        }
        if !(self.distance(1, 17) > 0.0) {
            out.push(LandmarkViolation::ZeroFaceWidth);
        }
        if !(self.distance(5, 13) > 0.0) {
            out.push(LandmarkViolation::ZeroJawWidth);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceShape {
    Heart = 0,
    Oblong = 1,
    Oval = 2,
    Round = 3,
    Square = 4,
}

impl FaceShape {
    pub const COUNT: usize = 5;
    pub const ALL: [FaceShape; 5] = [
        FaceShape::Heart,
        FaceShape::Oblong,
        FaceShape::Oval,
        FaceShape::Round,
        FaceShape::Square,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FaceShape::Heart => "heart",
            FaceShape::Oblong => "oblong",
            FaceShape::Oval => "oval",
            FaceShape::Round => "round",
            FaceShape::Square => "square",
        }
    }
}

impl fmt::Display for FaceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaceShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|c| c.name() == lower)
            .ok_or_else(|| format!("unknown face shape label {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub landmarks: LandmarkSet,
    pub label: Option<FaceShape>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    samples: Vec<Sample>,
    pub provenance: String,
}

impl Dataset {
    /// Fails if any id is empty or repeated.
    pub fn new(samples: Vec<Sample>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.id.is_empty() {
                return Err(Error::Validation {
                    id: String::new(),
                    detail: "empty sample id".into(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Validation {
                    id: s.id.clone(),
                    detail: "duplicate sample id".into(),
                });
            }
        }
        Ok(Self {
            samples,
            provenance: provenance.into(),
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    /// Renders the dataset in the native-19 format.
    pub fn to_native_string(&self) -> String {
        let mut out = String::from("id,label");
        for i in 1..=NUM_POINTS {
            out.push_str(&format!(",x{i},y{i}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.id);
            out.push(',');
            if let Some(label) = s.label {
                out.push_str(label.name());
            }
            for p in s.landmarks.points() {
                out.push_str(&format!(",{},{}", p.x, p.y));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_native(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_native_string()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkFormat {
    Native19,
    Detector68Hairline,
}

impl FromStr for LandmarkFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "native-19" | "native19" => Ok(Self::Native19),
            "detector-68+hairline" | "detector-68" | "detector68" => Ok(Self::Detector68Hairline),
            _ => Err(format!("unknown landmark format {s:?}")),
        }
    }
}

pub fn parse_landmark_file(path: impl AsRef<Path>, format: LandmarkFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks(&text, format, path.display().to_string())
}

/// Parses landmark rows from text. `provenance` is stored on the dataset.
pub fn parse_landmarks(
    text: &str,
    format: LandmarkFormat,
    provenance: impl Into<String>,
) -> Result<Dataset> {
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let line_no = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        samples.push(parse_row(line, line_no, format)?);
    }
    Dataset::new(samples, provenance)
}

fn parse_row(line: &str, line_no: usize, format: LandmarkFormat) -> Result<Sample> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let expected = match format {
        LandmarkFormat::Native19 => 2 + 2 * NUM_POINTS,
        LandmarkFormat::Detector68Hairline => 4 + 2 * DETECTOR_POINTS,
    };
    let parse_err = |detail: String| Error::Parse {
        line: line_no,
        detail,
    };
    if fields.len() != expected {
        return Err(parse_err(format!(
            "expected {expected} fields, found {}",
            fields.len()
        )));
    }
    let id = fields[0].to_string();
    if id.is_empty() {
        return Err(parse_err("empty sample id".into()));
    }
    let label = match fields[1] {
        "" => None,
        text => Some(text.parse::<FaceShape>().map_err(parse_err)?),
    };
    let coords = fields[2..]
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.parse::<f64>()
                .map_err(|e| parse_err(format!("field {}: {e}: {f:?}", i + 3)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<Point2D> = coords
        .chunks_exact(2)
        .map(|c| Point2D::new(c[0], c[1]))
        .collect();

    let points: [Point2D; NUM_POINTS] = match format {
        LandmarkFormat::Native19 => pts.try_into().expect("field count checked"),
        LandmarkFormat::Detector68Hairline => map_detector_points(pts[0], &pts[1..]),
    };
    let landmarks = LandmarkSet::new(points).map_err(|v| Error::Validation {
        id: id.clone(),
        detail: v.to_string(),
    })?;
    Ok(Sample {
        id,
        landmarks,
        label,
    })
}

/// Maps 68 detector points plus a hairline point onto the 19-point model.
pub fn map_detector_points(hairline: Point2D, detector: &[Point2D]) -> [Point2D; NUM_POINTS] {
    assert_eq!(
        detector.len(),
        DETECTOR_POINTS,
        "expected 68 detector points"
    );
    let mut points = [Point2D::default(); NUM_POINTS];
    points[..17].copy_from_slice(&detector[..17]);
    points[HAIRLINE - 1] = hairline;
    points[MOUTH - 1] = detector[DETECTOR_MOUTH_INDEX];
    points
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub roll_limit_deg: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            roll_limit_deg: DEFAULT_ROLL_LIMIT_DEG,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleViolation {
    pub id: String,
    pub violation: LandmarkViolation,
}

/// Checks every sample against the landmark invariants and the roll limit.
/// An empty result means the dataset is clean.
pub fn validate_dataset(ds: &Dataset, cfg: &ValidationConfig) -> Vec<SampleViolation> {
    let mut report = Vec::new();
    for s in ds.iter() {
        for violation in landmark_problems(&s.landmarks, cfg) {
            report.push(SampleViolation {
                id: s.id.clone(),
                violation,
            });
        }
    }
    report
}

pub(crate) fn landmark_problems(
    lm: &LandmarkSet,
    cfg: &ValidationConfig,
) -> Vec<LandmarkViolation> {
    let mut out = lm.violations();
    if lm.points().iter().all(Point2D::is_finite) {
        let roll = lm.roll_degrees();
        if !(roll < cfg.roll_limit_deg) {
            out.push(LandmarkViolation::RollExceeded {
                degrees: roll,
                limit: cfg.roll_limit_deg,
            });
        }
    }
    out
}
