//! The conditional-model interface and model combinators.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::transition::TransitionMatrix;
use crate::types::ProbVector;

/// Anything that maps a feature vector to a distribution over class labels:
/// an exact conditional probability, its noisy image, or a trained classifier.
///
/// `predict` must be deterministic for fixed model state.
pub trait ConditionalModel {
    fn n_classes(&self) -> usize;
    fn predict(&self, x: &[f64]) -> ProbVector;
}

impl<M: ConditionalModel + ?Sized> ConditionalModel for &M {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }
    fn predict(&self, x: &[f64]) -> ProbVector {
        (**self).predict(x)
    }
}

impl<M: ConditionalModel + ?Sized> ConditionalModel for Box<M> {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }
    fn predict(&self, x: &[f64]) -> ProbVector {
        (**self).predict(x)
    }
}

/// The noisy conditional probability induced by pushing a clean model through
/// a transition matrix: `out[i] = sum_j tau[j][i] * base[j]`.
#[derive(Debug, Clone)]
pub struct NoisyModel<M> {
    base: M,
    tau: TransitionMatrix,
}

/// Composes a clean conditional model with label noise.
pub fn compose_noisy<M: ConditionalModel>(base: M, tau: TransitionMatrix) -> Result<NoisyModel<M>> {
    if base.n_classes() != tau.n_classes() {
        return Err(Error::Parameter(format!(
            "model has {} classes but transition matrix has {}",
            base.n_classes(),
            tau.n_classes()
        )));
    }
    Ok(NoisyModel { base, tau })
}

impl<M: ConditionalModel> ConditionalModel for NoisyModel<M> {
    fn n_classes(&self) -> usize {
        self.base.n_classes()
    }

    fn predict(&self, x: &[f64]) -> ProbVector {
        let eta = self.base.predict(x);
        let mut out = self.tau.transpose_apply(eta.entries());
        // Row-stochasticity preserves the unit sum up to rounding; renormalize
        // the residual so downstream strict validation cannot trip.
        let sum: f64 = out.iter().sum();
        for o in &mut out {
            *o /= sum;
        }
        ProbVector::new_unchecked(out)
    }
}

/// A model displaced from `base` by at most `epsilon` in sup norm: for each
/// input, one class (chosen by hashing the feature bits with the seed) gains
/// mass `epsilon` and the vector is renormalized.
///
/// Every entry then moves by at most `epsilon`: the boosted class by
/// `epsilon * (1 - p) / (1 + epsilon)` and the others by
/// `p * epsilon / (1 + epsilon)`.
#[derive(Debug, Clone)]
pub struct PerturbedModel<M> {
    base: M,
    epsilon: f64,
    seed: u64,
}

impl<M: ConditionalModel> PerturbedModel<M> {
    pub fn new(base: M, epsilon: f64, seed: u64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Parameter(format!(
                "perturbation size {epsilon} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            base,
            epsilon,
            seed,
        })
    }

    fn pick_class(&self, x: &[f64]) -> usize {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.seed.hash(&mut h);
        for v in x {
            v.to_bits().hash(&mut h);
        }
        (h.finish() % self.base.n_classes() as u64) as usize
    }
}

impl<M: ConditionalModel> ConditionalModel for PerturbedModel<M> {
    fn n_classes(&self) -> usize {
        self.base.n_classes()
    }

    fn predict(&self, x: &[f64]) -> ProbVector {
        let p = self.base.predict(x);
        let j = self.pick_class(x);
        let scale = 1.0 + self.epsilon;
        let mut out: Vec<f64> = p.entries().iter().map(|v| v / scale).collect();
        out[j] += self.epsilon / scale;
        ProbVector::new_unchecked(out)
    }
}
