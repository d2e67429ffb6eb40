//! Structured experiment configuration.
//!
//! A single TOML file describes a full experiment: data generation, noise
//! injection, margin-constant fitting, threshold selection, bound
//! evaluation, and optionally training. Every seed is an explicit required
//! field; nothing in the pipeline ever seeds itself from the clock.

use std::path::Path;

use anyhow::Context;
use labelcorr::synth::GaussianMixtureSpec;
use labelcorr::TransitionMatrix;
use serde::{Deserialize, Serialize};

use crate::io::usage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub synth: SynthSection,
    pub noise: NoiseSection,
    pub fit: FitSection,
    pub correction: CorrectionSection,
    pub bounds: BoundsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.synth.spec().context("[synth]")?;
        if let (CorrectionMode::Fixed, None) = (self.correction.mode, self.correction.delta) {
            return usage("[correction] mode \"fixed\" requires a delta value");
        }
        if self.bounds.epsilons.is_empty() {
            return usage("[bounds] epsilons must list at least one value");
        }
        if self
            .bounds
            .epsilons
            .iter()
            .any(|e| !e.is_finite() || *e < 0.0)
        {
            return usage("[bounds] epsilons must be finite and nonnegative");
        }
        if !self.bounds.t0.is_finite() || self.bounds.t0 <= 0.0 {
            return usage("[bounds] t0 must be finite and positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// The fixed 10-dimensional two-component benchmark mixture.
    Benchmark,
    /// Equally weighted components on a scaled simplex; takes `classes`,
    /// `dim`, and `spread`.
    Multiclass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub kind: SynthKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    pub n: usize,
    pub seed: u64,
}

impl SynthSection {
    pub fn spec(&self) -> anyhow::Result<GaussianMixtureSpec> {
        match self.kind {
            SynthKind::Benchmark => {
                if self.classes.is_some() || self.dim.is_some() || self.spread.is_some() {
                    return usage("synth kind \"benchmark\" takes no classes/dim/spread fields");
                }
                Ok(GaussianMixtureSpec::binary_benchmark())
            }
            SynthKind::Multiclass => {
                let (classes, dim, spread) = match (self.classes, self.dim, self.spread) {
                    (Some(c), Some(d), Some(s)) => (c, d, s),
                    _ => {
                        return usage("synth kind \"multiclass\" requires classes, dim, and spread")
                    }
                };
                Ok(GaussianMixtureSpec::multiclass(classes, dim, spread)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Uniform flipping at total rate `rho`.
    Uniform,
    /// Pair flipping to the next class at rate `rho`.
    Pair,
    /// Binary rates `tau10` and `tau01`.
    Binary,
    /// Explicit row-stochastic `rows`.
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau10: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl NoiseSection {
    pub fn matrix(&self, n_classes: usize) -> anyhow::Result<TransitionMatrix> {
        let tau = match self.kind {
            NoiseKind::Uniform => {
                let rho = self.require_rho()?;
                TransitionMatrix::uniform_flip(n_classes, rho)?
            }
            NoiseKind::Pair => {
                let rho = self.require_rho()?;
                TransitionMatrix::pair_flip(n_classes, rho)?
            }
            NoiseKind::Binary => match (self.tau10, self.tau01) {
                (Some(t10), Some(t01)) => TransitionMatrix::binary(t10, t01)?,
                _ => return usage("noise kind \"binary\" requires tau10 and tau01"),
            },
            NoiseKind::Matrix => match &self.rows {
                Some(rows) => TransitionMatrix::from_rows(rows.clone())?,
                None => return usage("noise kind \"matrix\" requires rows"),
            },
        };
        if tau.n_classes() != n_classes {
            return usage(format!(
                "noise matrix has {} classes but the mixture has {n_classes}",
                tau.n_classes()
            ));
        }
        Ok(tau)
    }

    fn require_rho(&self) -> anyhow::Result<f64> {
        match self.rho {
            Some(rho) => Ok(rho),
            None => usage("this noise kind requires a rho value"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub t_min: f64,
    pub t_max: f64,
    pub n_grid: usize,
    /// Margin ceiling for the regression; defaults by class count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionMode {
    /// Use the configured `delta` as is.
    Fixed,
    /// Dataset critical value maximizing guaranteed flip coverage.
    Sensitivity,
    /// Dataset critical value guaranteeing kept labels stay kept.
    Specificity,
    /// Closed-form optimal binary threshold from the noise rates.
    BinaryOptimal,
}

impl CorrectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrectionMode::Fixed => "fixed",
            CorrectionMode::Sensitivity => "sensitivity",
            CorrectionMode::Specificity => "specificity",
            CorrectionMode::BinaryOptimal => "binary-optimal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionSection {
    pub mode: CorrectionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    /// Perturbation magnitudes to evaluate; 0 means the exact oracle.
    pub epsilons: Vec<f64>,
    /// Margin-condition cutoff assumed by the closed forms.
    pub t0: f64,
    pub perturb_seed: u64,
    /// Assumed threshold error; when present the approximate per-side
    /// bounds are evaluated in addition to the exact ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
}

/// Training hyperparameters; everything except the seed falls back to the
/// library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    /// Epoch period of learning-rate halving; 0 disables the schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halve_lr_every: Option<usize>,
}
