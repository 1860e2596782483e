//! Accuracy versus training-set size.
//!
//! For every training size each classifier is trained on a subset of the
//! dataset, scored on that subset (training accuracy) and then on an
//! evaluation set: by default the whole dataset, training samples included.

use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifiers::{predict, train_lenient, ClassifierConfig, ClassifierKind};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector};
use crate::landmarks::{Dataset, FaceShape};

mod report;
pub mod synth;

pub use report::{emit_report, parse_report_csv, render_report, CsvRow, ReportFormat};
pub use synth::{synth_dataset, ShapeTemplate, SynthConfig};

pub const DEFAULT_SIZES: [usize; 5] = [100, 200, 300, 400, 500];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetStrategy {
    /// The first `size` samples in dataset order.
    Prefix,
    /// Equal counts per class, drawn from a seeded per-class shuffle.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Score on every sample, training samples included.
    OverallOnAll,
    /// Score only on samples left out of training.
    HoldoutRemainder,
}

impl fmt::Display for SubsetStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubsetStrategy::Prefix => "prefix",
            SubsetStrategy::Stratified => "stratified",
        })
    }
}

impl FromStr for SubsetStrategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "prefix" => Ok(Self::Prefix),
            "stratified" => Ok(Self::Stratified),
            _ => Err(format!("unknown subset strategy {s:?}")),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::OverallOnAll => "overall-on-all",
            EvalMode::HoldoutRemainder => "holdout-remainder",
        })
    }
}

impl FromStr for EvalMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "overall-on-all" => Ok(Self::OverallOnAll),
            "holdout-remainder" => Ok(Self::HoldoutRemainder),
            _ => Err(format!("unknown evaluation mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub classifiers: Vec<ClassifierConfig>,
    pub seed: u64,
    pub subset_strategy: SubsetStrategy,
    pub eval_mode: EvalMode,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: DEFAULT_SIZES.to_vec(),
            classifiers: ClassifierConfig::all_defaults(),
            seed: 0,
            subset_strategy: SubsetStrategy::Stratified,
            eval_mode: EvalMode::OverallOnAll,
        }
    }
}

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix(pub [[u64; FaceShape::COUNT]; FaceShape::COUNT]);

impl ConfusionMatrix {
    pub fn record(&mut self, truth: FaceShape, predicted: FaceShape) {
        self.0[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..FaceShape::COUNT).map(|i| self.0[i][i]).sum()
    }

    pub fn row_sum(&self, class: FaceShape) -> u64 {
        self.0[class.index()].iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub classifier: ClassifierKind,
    pub size: usize,
    pub training_accuracy: f64,
    pub overall_accuracy: f64,
    pub training_confusion: ConfusionMatrix,
    pub confusion: ConfusionMatrix,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRecord {
    pub size: usize,
    pub train_ids: Vec<String>,
    pub eval_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchMetadata {
    pub seed: u64,
    pub strategy: SubsetStrategy,
    pub eval_mode: EvalMode,
    pub dataset_size: usize,
    pub provenance: String,
    /// Wall-clock bounds of the run in Unix seconds. Not written to reports.
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub sizes: Vec<usize>,
    pub classifiers: Vec<ClassifierKind>,
    /// Classifier-major: all sizes for the first classifier, then the next.
    pub cells: Vec<BenchCell>,
    pub subsets: Vec<SubsetRecord>,
    pub metadata: BenchMetadata,
}

impl BenchReport {
    pub fn cell(&self, classifier: ClassifierKind, size: usize) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.classifier == classifier && c.size == size)
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Picks the training indices for one size, in dataset order.
pub fn training_subset(
    labels: &[FaceShape],
    size: usize,
    strategy: SubsetStrategy,
    seed: u64,
) -> Result<Vec<usize>> {
    if size == 0 || size > labels.len() {
        return Err(Error::invalid(format!(
            "training size {size} must be in 1..={}",
            labels.len()
        )));
    }
    match strategy {
        SubsetStrategy::Prefix => Ok((0..size).collect()),
        SubsetStrategy::Stratified => {
            // one shuffle per class, shared by every size, so subsets nest
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = Vec::with_capacity(size);
            for class in FaceShape::ALL {
                let mut members: Vec<usize> =
                    (0..labels.len()).filter(|&i| labels[i] == class).collect();
                members.shuffle(&mut rng);
                let quota =
                    size / FaceShape::COUNT + usize::from(class.index() < size % FaceShape::COUNT);
                if members.len() < quota {
                    return Err(Error::invalid(format!(
                        "stratified size {size} needs {quota} {class} samples, dataset has {}",
                        members.len()
                    )));
                }
                picked.extend_from_slice(&members[..quota]);
            }
            picked.sort_unstable();
            Ok(picked)
        }
    }
}

pub fn run_benchmark(ds: &Dataset, cfg: &BenchConfig) -> Result<BenchReport> {
    let started_unix = unix_now();
    if cfg.classifiers.is_empty() {
        return Err(Error::invalid("no classifiers configured"));
    }
    if cfg.sizes.is_empty() {
        return Err(Error::invalid("no training sizes configured"));
    }
    if cfg.sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("training sizes must be sorted ascending"));
    }
    if let Some(&max) = cfg.sizes.last() {
        if max > ds.len() {
            return Err(Error::invalid(format!(
                "training size {max} exceeds dataset size {}",
                ds.len()
            )));
        }
    }
    let mut labels = Vec::with_capacity(ds.len());
    let mut features: Vec<FeatureVector> = Vec::with_capacity(ds.len());
    for s in ds.iter() {
        let label = s
            .label
            .ok_or_else(|| Error::invalid(format!("sample {} is unlabeled", s.id)))?;
        labels.push(label);
        features.push(
            extract_features(&s.landmarks).map_err(|e| Error::Validation {
                id: s.id.clone(),
                detail: e.to_string(),
            })?,
        );
    }

    let mut subsets = Vec::with_capacity(cfg.sizes.len());
    let mut plans = Vec::with_capacity(cfg.sizes.len());
    for &size in &cfg.sizes {
        let train_idx = training_subset(&labels, size, cfg.subset_strategy, cfg.seed)?;
        let eval_idx: Vec<usize> = match cfg.eval_mode {
            EvalMode::OverallOnAll => (0..ds.len()).collect(),
            EvalMode::HoldoutRemainder => {
                let mut in_train = vec![false; ds.len()];
                train_idx.iter().for_each(|&i| in_train[i] = true);
                (0..ds.len()).filter(|&i| !in_train[i]).collect()
            }
        };
        if eval_idx.is_empty() {
            return Err(Error::invalid(format!(
                "training size {size} leaves no samples to evaluate"
            )));
        }
        let ids = |idx: &[usize]| idx.iter().map(|&i| ds.samples()[i].id.clone()).collect();
        subsets.push(SubsetRecord {
            size,
            train_ids: ids(&train_idx),
            eval_ids: ids(&eval_idx),
        });
        plans.push((size, train_idx, eval_idx));
    }

    let jobs: Vec<(&ClassifierConfig, &(usize, Vec<usize>, Vec<usize>))> = cfg
        .classifiers
        .iter()
        .flat_map(|c| plans.iter().map(move |p| (c, p)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|(ccfg, (size, train_idx, eval_idx))| {
            let xs: Vec<FeatureVector> = train_idx.iter().map(|&i| features[i]).collect();
            let ys: Vec<FaceShape> = train_idx.iter().map(|&i| labels[i]).collect();
            let model = train_lenient(ccfg, &xs, &ys)?;
            let score = |idx: &[usize]| -> Result<ConfusionMatrix> {
                let mut m = ConfusionMatrix::default();
                for &i in idx {
                    m.record(labels[i], predict(&model, &features[i])?.label);
                }
                Ok(m)
            };
            let training_confusion = score(train_idx)?;
            let confusion = score(eval_idx)?;
            Ok(BenchCell {
                classifier: ccfg.kind,
                size: *size,
                training_accuracy: training_confusion.accuracy(),
                overall_accuracy: confusion.accuracy(),
                training_confusion,
                confusion,
                converged: model.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BenchReport {
        sizes: cfg.sizes.clone(),
        classifiers: cfg.classifiers.iter().map(|c| c.kind).collect(),
        cells,
        subsets,
        metadata: BenchMetadata {
            seed: cfg.seed,
            strategy: cfg.subset_strategy,
            eval_mode: cfg.eval_mode,
            dataset_size: ds.len(),
            provenance: ds.provenance.clone(),
            started_unix,
            finished_unix: unix_now(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n_per: usize) -> Vec<FaceShape> {
        (0..n_per * 5).map(|i| FaceShape::ALL[i % 5]).collect()
    }

    #[test]
    fn stratified_subsets_are_balanced_and_nested() {
        let ys = labels(100);
        let mut prev: Vec<usize> = Vec::new();
        for size in DEFAULT_SIZES {
            let idx = training_subset(&ys, size, SubsetStrategy::Stratified, 3).unwrap();
            assert_eq!(idx.len(), size);
            for c in FaceShape::ALL {
                assert_eq!(idx.iter().filter(|&&i| ys[i] == c).count(), size / 5);
            }
            assert!(prev.iter().all(|i| idx.contains(i)));
            prev = idx;
        }
    }

    #[test]
    fn uneven_sizes_favor_low_classes() {
        let ys = labels(10);
        let idx = training_subset(&ys, 7, SubsetStrategy::Stratified, 0).unwrap();
        let count = |c: FaceShape| idx.iter().filter(|&&i| ys[i] == c).count();
        assert_eq!(count(FaceShape::Heart), 2);
        assert_eq!(count(FaceShape::Oblong), 2);
        assert_eq!(count(FaceShape::Oval), 1);
    }

    #[test]
    fn prefix_is_a_prefix() {
        let ys = labels(4);
        assert_eq!(
            training_subset(&ys, 3, SubsetStrategy::Prefix, 9).unwrap(),
            vec![0, 1, 2]
        );
        assert!(training_subset(&ys, 21, SubsetStrategy::Prefix, 9).is_err());
    }

    #[test]
    fn confusion_accuracy_is_trace_over_total() {
        let mut m = ConfusionMatrix::default();
        m.record(FaceShape::Oval, FaceShape::Oval);
        m.record(FaceShape::Oval, FaceShape::Round);
        m.record(FaceShape::Heart, FaceShape::Heart);
        assert_eq!(m.total(), 3);
        assert_eq!(m.trace(), 2);
        assert_eq!(m.row_sum(FaceShape::Oval), 2);
        assert!((m.accuracy() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mode_names_parse() {
        for s in ["prefix", "stratified"] {
            assert_eq!(s.parse::<SubsetStrategy>().unwrap().to_string(), s);
        }
        for s in ["overall-on-all", "holdout-remainder"] {
            assert_eq!(s.parse::<EvalMode>().unwrap().to_string(), s);
        }
    }
}
