//! Fairness auditing and bias mitigation for binary tabular classifiers.
//!
//! The crate covers the full audit pipeline: cohort ingestion and
//! cross-validation splits, from-scratch weighted classifiers, group
//! fairness metrics with Tukey confidence machinery, five mitigation
//! algorithms (SUP, RW, DIR, CPP, PSTA), synthetic cohort generation with
//! controlled prevalence gaps, and an experiment harness with JSON/CSV
//! reports and SVG figures.
//!
//! Numeric kernels are generic over the [`num::Real`] scalar; the aliases
//! below pin the common `f64` instantiations.

pub mod cohort;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mitigation;
pub mod models;
pub mod num;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// `f64` instantiations of the generic kernels.
pub type EncodedMatrix64 = cohort::EncodedMatrix<f64>;
pub type ConfusionCounts64 = metrics::ConfusionCounts<f64>;
pub type LogisticConfig64 = models::LogisticConfig<f64>;
pub type GbtConfig64 = models::GbtConfig<f64>;
pub type ModelConfig64 = models::ModelConfig<f64>;
pub type TrainedModel64 = models::TrainedModel<f64>;
pub type ThresholdPolicy64 = mitigation::ThresholdPolicy<f64>;
pub type CppPolicy64 = mitigation::CppPolicy<f64>;
pub type TukeyOutcome64 = metrics::TukeyOutcome<f64>;
