//! Face-shape classifiers behind one train/predict contract.
//!
//! Every model normalizes its input with z-score statistics fit on the
//! training set, so callers always pass raw feature vectors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{fit_normalizer, FeatureVector, NormalizationStats, NUM_FEATURES};
use crate::landmarks::FaceShape;

pub mod knn;
pub mod lda;
pub mod mlp;
mod persist;
pub mod svm;

pub use mlp::mlp_loss_grad;
pub use persist::{load_model, model_from_str, model_to_string, save_model, FORMAT_VERSION};

const NUM_CLASSES: usize = FaceShape::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    Lda,
    SvmLinear,
    SvmRbf,
    Mlp,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Lda,
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmRbf,
        ClassifierKind::Mlp,
        ClassifierKind::Knn,
    ];

    /// Lowercase tag used on the command line and in model files.
    pub fn tag(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::SvmLinear => "svm-lin",
            ClassifierKind::SvmRbf => "svm-rbf",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Knn => "knn",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "LDA",
            ClassifierKind::SvmLinear => "SVM-LIN",
            ClassifierKind::SvmRbf => "SVM-RBF",
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::Knn => "KNN",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == lower || k.display_name().to_ascii_lowercase() == lower)
            .ok_or_else(|| format!("unknown classifier kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub svm_c: f64,
    pub rbf_gamma: f64,
    pub knn_k: usize,
    pub lda_components: usize,
    pub mlp_hidden: Vec<usize>,
    pub mlp_l2: f64,
    pub seed: u64,
}

impl ClassifierConfig {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            svm_c: 0.01,
            rbf_gamma: 1.0 / NUM_FEATURES as f64,
            knn_k: 5,
            lda_components: 2,
            mlp_hidden: vec![5, 2],
            mlp_l2: 1e-4,
            seed: 0,
        }
    }

    /// One config per kind, all at default settings.
    pub fn all_defaults() -> Vec<Self> {
        ClassifierKind::ALL.into_iter().map(Self::new).collect()
    }

    fn check(&self) -> Result<()> {
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return Err(Error::invalid("svm_c must be > 0"));
        }
        if !(self.rbf_gamma > 0.0 && self.rbf_gamma.is_finite()) {
            return Err(Error::invalid("rbf_gamma must be > 0"));
        }
        if self.knn_k == 0 {
            return Err(Error::invalid("knn_k must be >= 1"));
        }
        if self.lda_components == 0 || self.lda_components > NUM_FEATURES {
            return Err(Error::invalid(format!(
                "lda_components must be in 1..={NUM_FEATURES}"
            )));
        }
        if self.mlp_hidden.contains(&0) {
            return Err(Error::invalid("mlp_hidden layer sizes must be >= 1"));
        }
        if !(self.mlp_l2 >= 0.0 && self.mlp_l2.is_finite()) {
            return Err(Error::invalid("mlp_l2 must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Lda(lda::LdaParams),
    Svm(svm::SvmParams),
    Mlp(mlp::MlpParams),
    Knn(knn::KnnParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ClassifierConfig,
    pub norm: NormalizationStats,
    pub params: ModelParams,
    /// False when an iterative solver stopped at its cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: FaceShape,
    pub scores: [f64; NUM_CLASSES],
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_lowest(scores: &[f64; NUM_CLASSES]) -> FaceShape {
    let mut best = 0;
    for i in 1..NUM_CLASSES {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    FaceShape::from_index(best).expect("index below class count")
}

pub fn train(
    cfg: &ClassifierConfig,
    xs: &[FeatureVector],
    ys: &[FaceShape],
) -> Result<TrainedModel> {
    cfg.check()?;
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "{} feature vectors but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("need at least two training samples"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("training features must be finite"));
    }
    let first = ys[0];
    if ys.iter().all(|&y| y == first) {
        return Err(Error::invalid("single class"));
    }
    if cfg.kind == ClassifierKind::Knn && xs.len() < cfg.knn_k {
        return Err(Error::invalid(format!(
            "knn_k = {} exceeds training set size {}",
            cfg.knn_k,
            xs.len()
        )));
    }

    let norm = fit_normalizer(xs)?;
    let zs: Vec<FeatureVector> = xs.iter().map(|x| norm.apply(x)).collect();
    let mut converged = true;
    let params = match cfg.kind {
        ClassifierKind::Lda => ModelParams::Lda(lda::fit(&zs, ys, cfg.lda_components)?),
        ClassifierKind::SvmLinear | ClassifierKind::SvmRbf => {
            let kernel = svm::Kernel::for_config(cfg);
            let (params, failure) = svm::fit_one_vs_one(&zs, ys, kernel, cfg.svm_c);
            if let Some((a, b, iterations)) = failure {
                converged = false;
                let model = TrainedModel {
                    config: cfg.clone(),
                    norm,
                    params: ModelParams::Svm(params),
                    converged,
                };
                return Err(Error::TrainingDidNotConverge {
                    a,
                    b,
                    iterations,
                    model: Box::new(model),
                });
            }
            ModelParams::Svm(params)
        }
        ClassifierKind::Mlp => {
            let (params, _status) = mlp::fit(&zs, ys, &cfg.mlp_hidden, cfg.mlp_l2, cfg.seed)?;
            ModelParams::Mlp(params)
        }
        ClassifierKind::Knn => ModelParams::Knn(knn::KnnParams::new(&zs, ys)),
    };
    Ok(TrainedModel {
        config: cfg.clone(),
        norm,
        params,
        converged,
    })
}

/// Like [`train`], but keeps a model whose solver hit its iteration cap.
pub fn train_lenient(
    cfg: &ClassifierConfig,
    xs: &[FeatureVector],
    ys: &[FaceShape],
) -> Result<TrainedModel> {
    match train(cfg, xs, ys) {
        Err(Error::TrainingDidNotConverge { model, .. }) => Ok(*model),
        other => other,
    }
}

pub fn predict(model: &TrainedModel, x: &FeatureVector) -> Result<Prediction> {
    if !x.is_finite() {
        return Err(Error::invalid("feature vector is not finite"));
    }
    let z = model.norm.apply(x);
    Ok(match &model.params {
        ModelParams::Lda(p) => p.predict(&z),
        ModelParams::Svm(p) => p.predict(&z),
        ModelParams::Mlp(p) => p.predict(&z),
        ModelParams::Knn(p) => p.predict(&z, model.config.knn_k),
    })
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
