//! Classifier selection for correction commands.

use std::path::{Path, PathBuf};

use anyhow::Context;
use labelcorr::synth::{ExactEta, GaussianMixtureSpec};
use labelcorr::train::MlpModel;
use labelcorr::types::ProbVector;
use labelcorr::{compose_noisy, ConditionalModel, NoisyModel, TransitionMatrix};

use crate::io::{usage, SynthMeta};

/// Which classifier a command should run the likelihood-ratio test with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    /// Exact noisy conditional probability: the clean mixture oracle pushed
    /// through the transition matrix. Needs both sidecars.
    OracleNoisy,
    /// Exact clean conditional probability. Needs the mixture sidecar.
    OracleClean,
    /// A trained network loaded from a checkpoint file.
    Checkpoint(PathBuf),
}

impl ModelSpec {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        match text {
            "oracle-noisy" => Ok(ModelSpec::OracleNoisy),
            "oracle-clean" => Ok(ModelSpec::OracleClean),
            other => match other.strip_prefix("checkpoint:") {
                Some(path) if !path.is_empty() => Ok(ModelSpec::Checkpoint(path.into())),
                _ => usage(format!(
                    "unknown model \"{other}\"; expected oracle-noisy, oracle-clean, \
                     or checkpoint:<path>"
                )),
            },
        }
    }

    /// Kind label for reports; deliberately path-free.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::OracleNoisy => "oracle-noisy",
            ModelSpec::OracleClean => "oracle-clean",
            ModelSpec::Checkpoint(_) => "checkpoint",
        }
    }

    /// Builds the classifier, pulling oracle ingredients from the sidecars
    /// when the chosen variant needs them.
    pub fn build(
        &self,
        synth_meta: Option<&SynthMeta>,
        tau: Option<&TransitionMatrix>,
    ) -> anyhow::Result<AnyModel> {
        match self {
            ModelSpec::OracleNoisy => {
                let eta = oracle_eta(synth_meta, self.kind())?;
                let tau = match tau {
                    Some(t) => t.clone(),
                    None => {
                        return usage("model oracle-noisy requires --noise-meta");
                    }
                };
                Ok(AnyModel::OracleNoisy(compose_noisy(eta, tau)?))
            }
            ModelSpec::OracleClean => {
                Ok(AnyModel::OracleClean(oracle_eta(synth_meta, self.kind())?))
            }
            ModelSpec::Checkpoint(path) => {
                let model = MlpModel::load_checkpoint(path)
                    .with_context(|| format!("loading checkpoint {}", path.display()))?;
                Ok(AnyModel::Network(Box::new(model)))
            }
        }
    }
}

fn oracle_eta(meta: Option<&SynthMeta>, kind: &str) -> anyhow::Result<ExactEta> {
    match meta {
        Some(meta) => {
            let spec = GaussianMixtureSpec::new(meta.means.clone(), meta.weights.clone())?;
            Ok(spec.exact_eta())
        }
        None => usage(format!("model {kind} requires --synth-meta")),
    }
}

/// The classifiers a command can be asked to run with, behind one type so
/// call sites stay monomorphic.
#[derive(Debug, Clone)]
pub enum AnyModel {
    OracleNoisy(NoisyModel<ExactEta>),
    OracleClean(ExactEta),
    Network(Box<MlpModel>),
}

impl ConditionalModel for AnyModel {
    fn n_classes(&self) -> usize {
        match self {
            AnyModel::OracleNoisy(m) => m.n_classes(),
            AnyModel::OracleClean(m) => m.n_classes(),
            AnyModel::Network(m) => m.n_classes(),
        }
    }

    fn predict(&self, x: &[f64]) -> ProbVector {
        match self {
            AnyModel::OracleNoisy(m) => m.predict(x),
            AnyModel::OracleClean(m) => m.predict(x),
            AnyModel::Network(m) => m.predict(x),
        }
    }
}

/// Loads the mixture sidecar when a path is given.
pub fn load_synth_meta(path: Option<&Path>) -> anyhow::Result<Option<SynthMeta>> {
    path.map(|p| crate::io::read_checked(p, "synth-meta"))
        .transpose()
}
