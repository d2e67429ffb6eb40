//! Labels and probability vectors.

use crate::error::{Error, Result};

/// Zero-based class index. Valid values are `0..n_classes` for the dataset at
/// hand; operations that know the class count validate against it.
pub type ClassLabel = usize;

/// A probability distribution over classes: nonnegative entries summing to 1.
///
/// Two tolerances are used: values parsed from text files may miss the unit
/// sum by up to [`ProbVector::INPUT_TOLERANCE`], while vectors built by this
/// crate's own arithmetic are held to [`ProbVector::CONSTRUCTION_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    /// Sum tolerance for externally supplied values.
    pub const INPUT_TOLERANCE: f64 = 1e-9;
    /// Sum tolerance for internally constructed values.
    pub const CONSTRUCTION_TOLERANCE: f64 = 1e-12;

    /// Validates entries (each in `[0, 1]`, sum within `INPUT_TOLERANCE` of 1).
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Parameter(format!(
                "probability vector needs at least 2 classes, got {}",
                entries.len()
            )));
        }
        let mut sum = 0.0;
        for (i, &e) in entries.iter().enumerate() {
            if !e.is_finite() || !(0.0..=1.0).contains(&e) {
                return Err(Error::Parameter(format!(
                    "probability entry {i} = {e} outside [0, 1]"
                )));
            }
            sum += e;
        }
        if (sum - 1.0).abs() > Self::INPUT_TOLERANCE {
            return Err(Error::Parameter(format!(
                "probability entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self { entries })
    }

    /// Wraps entries the caller guarantees are already normalized.
    ///
    /// Debug builds assert the tighter construction tolerance.
    pub fn new_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(entries.len() >= 2);
        debug_assert!(
            (entries.iter().sum::<f64>() - 1.0).abs() <= Self::CONSTRUCTION_TOLERANCE,
            "unnormalized construction: sum = {}",
            entries.iter().sum::<f64>()
        );
        debug_assert!(entries.iter().all(|e| *e >= 0.0 && e.is_finite()));
        Self { entries }
    }

    pub fn n_classes(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Probability of class `label`.
    pub fn get(&self, label: ClassLabel) -> f64 {
        self.entries[label]
    }

    /// Index of the largest entry, ties broken toward the lowest index.
    pub fn argmax(&self) -> ClassLabel {
        let mut best = 0;
        for (i, &e) in self.entries.iter().enumerate().skip(1) {
            if e > self.entries[best] {
                best = i;
            }
        }
        best
    }

    /// Best and second-best class, both with lowest-index tie-breaking.
    pub fn top_two(&self) -> (ClassLabel, ClassLabel) {
        let best = self.argmax();
        let mut second = if best == 0 { 1 } else { 0 };
        for (i, &e) in self.entries.iter().enumerate() {
            if i != best && e > self.entries[second] {
                second = i;
            }
        }
        (best, second)
    }
}
