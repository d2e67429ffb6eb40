//! Results documents and atomic file output.
//!
//! Every JSON document starts with the same header block: schema version,
//! document kind, tool version, and the random-number algorithm in use.
//! Readers check the kind and refuse documents whose schema major version
//! they do not understand. All writes go through a temporary file in the
//! destination directory followed by a rename, so a crashed run never leaves
//! a half-written document behind.

use std::fmt;
use std::path::Path;

use anyhow::Context;
use labelcorr::bounds::{BoundKind, TsybakovFit};
use labelcorr::rng::RNG_ALGORITHM;
use labelcorr::TransitionMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Schema version embedded in every document this binary writes.
pub const SCHEMA_VERSION: &str = "1.0";

/// A semantic usage error: wrong flag combinations or values that static
/// argument parsing cannot reject. Mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Shorthand constructor for `Err(UsageError(...))` inside `anyhow` chains.
pub fn usage<T>(message: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(message.into()).into())
}

/// Common header of every JSON results document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: String,
    pub kind: String,
    pub tool_version: String,
    pub rng_algorithm: String,
}

impl Header {
    pub fn new(kind: &str) -> Self {
        Header {
            schema_version: SCHEMA_VERSION.into(),
            kind: kind.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            rng_algorithm: RNG_ALGORITHM.into(),
        }
    }

    /// Rejects unknown schema major versions, naming the offending field.
    pub fn check_version(&self) -> anyhow::Result<()> {
        let major = self.schema_version.split('.').next().unwrap_or("");
        let supported = SCHEMA_VERSION.split('.').next().unwrap_or("");
        if major != supported {
            anyhow::bail!(
                "schema_version: found \"{}\", this tool supports major version {supported}",
                self.schema_version
            );
        }
        Ok(())
    }

    /// As [`Header::check_version`], and additionally rejects unexpected
    /// document kinds.
    pub fn check(&self, expected_kind: &str) -> anyhow::Result<()> {
        self.check_version()?;
        if self.kind != expected_kind {
            anyhow::bail!(
                "kind: found \"{}\", expected \"{expected_kind}\"",
                self.kind
            );
        }
        Ok(())
    }
}

/// Sidecar written next to a generated dataset; carries everything needed to
/// rebuild the exact mixture oracle and to regenerate the file bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMeta {
    #[serde(flatten)]
    pub header: Header,
    pub means: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// Sidecar written next to a corrupted dataset: the transition matrix, the
/// injection seed, and the observed per-row flip rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMeta {
    #[serde(flatten)]
    pub header: Header,
    pub tau: TransitionMatrix,
    pub seed: u64,
    pub observed_rates: Vec<Vec<f64>>,
}

/// Output of `fit-tsybakov`: the grid that was requested and the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    #[serde(flatten)]
    pub header: Header,
    pub t_min: f64,
    pub t_max: f64,
    pub n_grid: usize,
    pub ceiling: f64,
    pub fit: TsybakovFit,
}

/// Output of `lrt-correct --report`: what was corrected and how it went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionDocument {
    #[serde(flatten)]
    pub header: Header,
    /// Model kind only, never a path, so reports stay location-independent.
    pub model: String,
    pub delta_mode: String,
    pub delta_used: f64,
    pub n_samples: usize,
    pub n_flipped: usize,
    pub flip_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement_with_bayes: Option<f64>,
}

/// One evaluated point of a bound curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub epsilon: f64,
    pub bound_kind: BoundKind,
    pub bound_value: f64,
    pub empirical_value: f64,
    /// Whether the closed form's validity condition holds at this epsilon.
    pub valid: bool,
}

/// Threshold actually applied at one perturbation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub epsilon: f64,
    pub delta: f64,
}

/// Output of `eval-bounds`: the resolved experiment, the margin fit, the
/// thresholds that were applied, and every bound/empirical pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsDocument {
    #[serde(flatten)]
    pub header: Header,
    pub config: ExperimentConfig,
    pub fit: TsybakovFit,
    /// Confidence threshold of the joint-event comparison.
    pub joint_threshold: f64,
    pub deltas: Vec<DeltaRecord>,
    pub records: Vec<BoundRecord>,
}

/// Writes bytes to `path` atomically: temporary file in the same directory,
/// then rename over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Serializes a document as pretty JSON and writes it atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

/// Reads and deserializes a JSON document.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Reads a JSON document and checks its header.
pub fn read_checked<T>(path: &Path, kind: &str) -> anyhow::Result<T>
where
    T: DeserializeOwned + HasHeader,
{
    let doc: T = read_json(path)?;
    doc.header()
        .check(kind)
        .with_context(|| format!("document {}", path.display()))?;
    Ok(doc)
}

/// Access to the common header, for generic schema checking.
pub trait HasHeader {
    fn header(&self) -> &Header;
}

macro_rules! impl_has_header {
    ($($ty:ty),*) => {
        $(impl HasHeader for $ty {
            fn header(&self) -> &Header {
                &self.header
            }
        })*
    };
}

impl_has_header!(
    SynthMeta,
    NoiseMeta,
    FitDocument,
    CorrectionDocument,
    BoundsDocument
);

/// Writes a dataset CSV atomically through the library's serializer.
pub fn write_dataset(path: &Path, data: &labelcorr::LabeledDataset) -> anyhow::Result<()> {
    let mut bytes = Vec::new();
    data.write_csv(&mut bytes)?;
    atomic_write(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

/// Reads a dataset CSV.
pub fn read_dataset(path: &Path) -> anyhow::Result<labelcorr::LabeledDataset> {
    labelcorr::LabeledDataset::load_csv(path).with_context(|| format!("reading {}", path.display()))
}
