//! Corpus-provenance audit toolkit.
//!
//! Two measurements share this crate:
//!
//! * **Ablation by unlearning.** [`unlearn`] raises a trainable model's loss
//!   on a target corpus while holding its next-token distributions on a safe
//!   corpus close to a frozen reference. [`evalkit`] runs citizen queries
//!   before and after, tallies human error codes, and correlates the
//!   per-query effect with how widely each topic is covered elsewhere.
//! * **Information leakage probes.** [`leakage`] renders completion and
//!   question prompts for published statistics, classifies replies as
//!   recalled, not recalled or reticent, and assembles the result matrix.
//!
//! [`corpus`] fetches and chunks the text, [`model`] abstracts over model
//! backends, and [`report`] turns run artifacts into figure data and images.
//!
//! The numerical code is generic over [`Scalar`] (`f32`/`f64`); the aliases
//! below fix the precision used by the CLI.

pub mod corpus;
pub mod evalkit;
pub mod fixtures;
pub mod jsonl;
pub mod leakage;
pub mod model;
pub mod report;
pub mod scalar;
pub mod unlearn;

pub use scalar::Scalar;

/// The fixture language model at the precision used for runs and checkpoints.
pub type TinyLm = model::NeuralLm<f64>;
/// Single-precision variant, handy for quick experiments.
pub type TinyLm32 = model::NeuralLm<f32>;
/// Bigram double used for gradient checks.
pub type ToyLm = model::BigramLm<f64>;
/// Unlearning objective evaluated in double precision.
pub type Objective = unlearn::ObjectiveValue<f64>;
/// Pearson correlation result in double precision.
pub type Correlation = evalkit::CorrelationResult<f64>;
