//! Fall-detection benchmark over waist-worn IMU trial files.
//!
//! The pipeline ingests raw trial text files (nine ADC counts per line
//! from two accelerometers and a gyroscope), derives either the raw
//! 9-attribute view or the 3-magnitude sum-vector-magnitude view, trains
//! five from-scratch classifiers, and evaluates them with seeded splits
//! and k-fold cross-validation across three subject cohorts.
//!
//! All feature and model math is generic over the scalar type via
//! [`scalar::Scalar`]; the concrete aliases below fix `f64`, which is what
//! the CLI uses throughout.

pub mod classifiers;
pub mod dataio;
pub mod evaluation;
pub mod experiments;
pub mod features;
pub mod ingest;
pub mod matrix;
pub mod report;
pub mod scalar;
pub mod synthetic;

/// Default scalar for the CLI and experiment runner.
pub type F = f64;

pub type Matrix64 = matrix::Matrix<F>;
pub type Dataset64 = features::LabeledDataset<F>;
pub type Model64 = classifiers::TrainedModel<F>;
