//! Synthetic Gaussian-mixture benchmarks with exactly known conditional
//! probabilities.
//!
//! The standard binary benchmark draws 10-dimensional features from two
//! equally weighted isotropic Gaussians with means at the all-zero and
//! all-one vectors; the component index is the clean label. Because the
//! density is known in closed form, the true conditional probability, the
//! Bayes labels, and every quantity derived from them are exact rather than
//! estimated.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::ConditionalModel;
use crate::rng::RandomSource;
use crate::types::{ClassLabel, ProbVector};

/// A mixture of equally shaped isotropic Gaussians, one component per class.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureSpec {
    dim: usize,
    means: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl GaussianMixtureSpec {
    /// Weight-sum tolerance.
    pub const WEIGHT_TOLERANCE: f64 = 1e-12;

    pub fn new(means: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::Parameter(format!(
                "mixture needs at least 2 components, got {}",
                means.len()
            )));
        }
        if weights.len() != means.len() {
            return Err(Error::Parameter(format!(
                "{} weights for {} components",
                weights.len(),
                means.len()
            )));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::Parameter(
                "mixture dimension must be positive".into(),
            ));
        }
        if means.iter().any(|m| m.len() != dim) {
            return Err(Error::Parameter(
                "component means differ in dimension".into(),
            ));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite component mean".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(Error::Parameter(
                "component weights must be positive".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::WEIGHT_TOLERANCE {
            return Err(Error::Parameter(format!(
                "component weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            dim,
            means,
            weights,
        })
    }

    /// The standard binary benchmark: 10 dimensions, means at the all-zero
    /// and all-one vectors, equal weights.
    pub fn binary_benchmark() -> Self {
        Self {
            dim: 10,
            means: vec![vec![0.0; 10], vec![1.0; 10]],
            weights: vec![0.5, 0.5],
        }
    }

    /// Multiclass extension of the benchmark: `n_classes` equally weighted
    /// components with means at `spread` times the one-hot basis vectors.
    /// The binary benchmark is the published construction; this layout simply
    /// gives the multiclass machinery a distribution with exact conditionals.
    pub fn multiclass(n_classes: usize, dim: usize, spread: f64) -> Result<Self> {
        if dim < n_classes {
            return Err(Error::Parameter(format!(
                "dimension {dim} too small for {n_classes} one-hot means"
            )));
        }
        if !spread.is_finite() || spread <= 0.0 {
            return Err(Error::Parameter(format!(
                "mean spread {spread} must be positive"
            )));
        }
        let means = (0..n_classes)
            .map(|i| {
                let mut m = vec![0.0; dim];
                m[i] = spread;
                m
            })
            .collect();
        Self::new(means, vec![1.0 / n_classes as f64; n_classes])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The exact conditional probability of this mixture.
    pub fn exact_eta(&self) -> ExactEta {
        ExactEta { spec: self.clone() }
    }
}

/// Draws `n` samples. Sample `i` consumes only substream `i` of `rng`:
/// component first (categorical by weight), then a standard normal vector
/// shifted by the component mean. Clean labels are the component indices and
/// noisy labels start out identical to them.
pub fn sample_dataset(spec: &GaussianMixtureSpec, n: usize, rng: RandomSource) -> LabeledDataset {
    assert!(n >= 1, "cannot sample an empty dataset");
    let d = spec.dim();
    let mut features = Vec::with_capacity(n * d);
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        let mut stream = rng.stream(i as u64);
        let u: f64 = stream.gen();
        let mut acc = 0.0;
        let mut component = spec.n_components() - 1;
        for (k, &w) in spec.weights().iter().enumerate() {
            acc += w;
            if u < acc {
                component = k;
                break;
            }
        }
        for &mean in &spec.means()[component] {
            let z: f64 = stream.sample(StandardNormal);
            features.push(mean + z);
        }
        clean.push(component);
    }
    LabeledDataset::new(features, d, spec.n_components(), clean.clone())
        .and_then(|ds| ds.with_clean_labels(clean))
        .expect("generated dataset is valid by construction")
}

/// Exact conditional probability of a Gaussian mixture, evaluated through a
/// log-sum-exp so that inputs far from every mean cannot overflow.
#[derive(Debug, Clone)]
pub struct ExactEta {
    spec: GaussianMixtureSpec,
}

impl ExactEta {
    pub fn spec(&self) -> &GaussianMixtureSpec {
        &self.spec
    }
}

impl ConditionalModel for ExactEta {
    fn n_classes(&self) -> usize {
        self.spec.n_components()
    }

    fn predict(&self, x: &[f64]) -> ProbVector {
        assert_eq!(x.len(), self.spec.dim(), "feature dimension mismatch");
        let mut logits: Vec<f64> = self
            .spec
            .means()
            .iter()
            .zip(self.spec.weights())
            .map(|(mean, w)| {
                let sq: f64 = x.iter().zip(mean).map(|(xi, mi)| (xi - mi).powi(2)).sum();
                w.ln() - 0.5 * sq
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for l in &mut logits {
            *l = (*l - max).exp();
            sum += *l;
        }
        for l in &mut logits {
            *l /= sum;
        }
        ProbVector::new_unchecked(logits)
    }
}

/// Returns a copy of `data` with Bayes labels attached: per sample the argmax
/// of `eta`, ties broken toward the lowest index.
pub fn bayes_labels<M: ConditionalModel>(eta: &M, data: &LabeledDataset) -> Result<LabeledDataset> {
    if eta.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "model has {} classes but dataset has {}",
            eta.n_classes(),
            data.n_classes()
        )));
    }
    let labels: Vec<ClassLabel> = (0..data.len())
        .map(|i| eta.predict(data.feature(i)).argmax())
        .collect();
    data.clone().with_bayes_labels(labels)
}
