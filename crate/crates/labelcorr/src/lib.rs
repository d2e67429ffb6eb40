//! Error-bounded correction of noisy labels.
//!
//! The crate covers the full pipeline for studying label noise with known
//! ground truth:
//!
//! - [`synth`]: Gaussian-mixture data where the true conditional class
//!   probabilities are available in closed form.
//! - [`transition`] and [`noise`]: row-stochastic label-noise models and
//!   dataset corruption with exactly reproducible randomness.
//! - [`lrt`]: likelihood-ratio label correction and the closed-form
//!   thresholds that make its error controllable.
//! - [`bounds`]: margin-condition constant fitting and the closed-form error
//!   bounds, plus the empirical quantities they dominate.
//! - [`train`]: a small from-scratch network and the adaptive correction
//!   training loop.
//!
//! Everything randomized draws from per-sample keyed streams
//! ([`rng::RandomSource`]), so results are bitwise reproducible and stable
//! under dataset growth.

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod lrt;
pub mod model;
pub mod noise;
pub mod rng;
pub mod synth;
pub mod train;
pub mod transition;
pub mod types;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use model::{compose_noisy, ConditionalModel, NoisyModel, PerturbedModel};
pub use rng::RandomSource;
pub use transition::{MatrixKind, TransitionMatrix};
pub use types::{ClassLabel, ProbVector};
