//! # faceshape
//!
//! Face-shape classification from facial landmark geometry.
//!
//! The pipeline:
//!
//! 1. [`landmarks`]: read 19-point faces (or 68-point detector output plus a
//!    hairline point) and check them.
//! 2. [`hairline`]: find the hairline point by scanning upward from the nose
//!    in an RGB image.
//! 3. [`features`]: turn each face into three proportions and sixteen chin
//!    angles, then z-score them.
//! 4. [`classifiers`]: LDA, one-vs-one SVM (linear and RBF), a small MLP
//!    trained with [`optim`]'s L-BFGS, and KNN.
//! 5. [`bench`]: accuracy versus training-set size, with markdown/CSV reports
//!    and a synthetic dataset generator.

pub mod bench;
pub mod classifiers;
mod error;
pub mod features;
pub mod hairline;
pub mod image;
pub mod landmarks;
pub mod optim;

pub use error::{Error, Result};
pub use features::{
    apply_normalizer, extract_features, fit_normalizer, FeatureVector, NormalizationStats,
};
pub use landmarks::{Dataset, FaceShape, LandmarkSet, Point2D, Sample};
