//! Label corruption driven by a transition matrix.

use rand::Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::transition::TransitionMatrix;

/// Returns a copy of `data` whose noisy labels are drawn per sample from the
/// transition-matrix row of that sample's clean label.
///
/// Sample `i` consumes only substream `i` of `rng`, so its noisy label
/// depends on `(seed, i)` alone: reordering, subsetting, or extending the
/// dataset never changes the label another sample receives. The noise is
/// class-conditional only; features never influence the draw.
pub fn inject_noise(
    data: &LabeledDataset,
    tau: &TransitionMatrix,
    rng: RandomSource,
) -> Result<LabeledDataset> {
    let clean = data.require_clean_labels()?;
    if tau.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "transition matrix has {} classes but dataset has {}",
            tau.n_classes(),
            data.n_classes()
        )));
    }
    let noisy = clean
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let u: f64 = rng.stream(i as u64).gen();
            let row = tau.row(c);
            let mut acc = 0.0;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    return j;
                }
            }
            // Row sums can fall a rounding error short of 1; the draw then
            // belongs to the last positive-probability cell.
            row.iter().rposition(|&p| p > 0.0).unwrap_or(c)
        })
        .collect();
    let mut out = data.clone();
    out.set_noisy_labels(noisy)?;
    Ok(out)
}

/// Counts of clean-to-noisy label transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    counts: Vec<Vec<u64>>,
}

impl ConfusionCounts {
    /// `counts[i][j]` = number of samples with clean label `i` and noisy
    /// label `j`.
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Rows normalized to frequencies; an all-zero row stays zero. For large
    /// samples this approximates the generating transition matrix.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    vec![0.0; row.len()]
                } else {
                    row.iter().map(|&c| c as f64 / total as f64).collect()
                }
            })
            .collect()
    }
}

/// Tallies clean-vs-noisy transitions in a dataset.
pub fn noise_summary(data: &LabeledDataset) -> Result<ConfusionCounts> {
    let clean = data.require_clean_labels()?;
    let k = data.n_classes();
    let mut counts = vec![vec![0u64; k]; k];
    for (&c, &y) in clean.iter().zip(data.noisy_labels()) {
        counts[c][y] += 1;
    }
    Ok(ConfusionCounts { counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use crate::synth::{sample_dataset, GaussianMixtureSpec};

    fn benchmark(n: usize, seed: u64) -> LabeledDataset {
        sample_dataset(
            &GaussianMixtureSpec::binary_benchmark(),
            n,
            RandomSource::new(seed),
        )
    }

    #[test]
    fn identity_matrix_preserves_labels() {
        let ds = benchmark(500, 1);
        let out = inject_noise(&ds, &TransitionMatrix::identity(2), RandomSource::new(2)).unwrap();
        assert_eq!(out.noisy_labels(), out.clean_labels().unwrap());
    }

    #[test]
    fn symmetric_flip_rate_concentrates() {
        let ds = benchmark(100_000, 3);
        let tau = TransitionMatrix::binary(0.3, 0.3).unwrap();
        let out = inject_noise(&ds, &tau, RandomSource::new(4)).unwrap();
        let freq = noise_summary(&out).unwrap().row_normalized();
        assert!(
            (freq[0][1] - 0.3).abs() < 0.01,
            "class-0 flip rate {}",
            freq[0][1]
        );
        assert!(
            (freq[1][0] - 0.3).abs() < 0.01,
            "class-1 flip rate {}",
            freq[1][0]
        );
    }

    #[test]
    fn one_sided_noise_never_touches_the_other_class() {
        let ds = benchmark(20_000, 5);
        let tau = TransitionMatrix::binary(0.3, 0.0).unwrap();
        let out = inject_noise(&ds, &tau, RandomSource::new(6)).unwrap();
        let counts = noise_summary(&out).unwrap();
        assert_eq!(counts.counts()[0][1], 0);
        assert!(counts.counts()[1][0] > 0);
    }

    #[test]
    fn labels_are_keyed_by_sample_index() {
        let ds_short = benchmark(100, 7);
        let ds_long = benchmark(300, 7);
        let tau = TransitionMatrix::binary(0.3, 0.3).unwrap();
        let short = inject_noise(&ds_short, &tau, RandomSource::new(8)).unwrap();
        let long = inject_noise(&ds_long, &tau, RandomSource::new(8)).unwrap();
        assert_eq!(&long.noisy_labels()[..100], short.noisy_labels());
    }

    #[test]
    fn missing_clean_labels_is_a_state_error() {
        let ds = LabeledDataset::new(vec![0.0, 1.0], 2, 2, vec![0]).unwrap();
        let tau = TransitionMatrix::identity(2);
        assert!(matches!(
            inject_noise(&ds, &tau, RandomSource::new(0)),
            Err(Error::State(_))
        ));
        assert!(matches!(noise_summary(&ds), Err(Error::State(_))));
    }

    #[test]
    fn dimension_mismatch_is_a_parameter_error() {
        let ds = benchmark(10, 9);
        let tau = TransitionMatrix::uniform_flip(3, 0.1).unwrap();
        assert!(matches!(
            inject_noise(&ds, &tau, RandomSource::new(0)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn uniform_flip_frequencies_match_matrix() {
        let spec = GaussianMixtureSpec::multiclass(4, 4, 2.0).unwrap();
        let ds = sample_dataset(&spec, 50_000, RandomSource::new(10));
        let tau = TransitionMatrix::uniform_flip(4, 0.4).unwrap();
        let out = inject_noise(&ds, &tau, RandomSource::new(11)).unwrap();
        let freq = noise_summary(&out).unwrap().row_normalized();
        for (i, row) in freq.iter().enumerate() {
            for (j, &f_ij) in row.iter().enumerate() {
                assert!(
                    (f_ij - tau.get(i, j)).abs() < 0.01,
                    "entry ({i},{j}): {f_ij} vs {}",
                    tau.get(i, j)
                );
            }
        }
    }

    #[test]
    fn single_sample_summary() {
        let ds = LabeledDataset::new(vec![0.0], 1, 2, vec![1])
            .unwrap()
            .with_clean_labels(vec![0])
            .unwrap();
        let counts = noise_summary(&ds).unwrap();
        assert_eq!(counts.counts(), &[vec![0, 1], vec![0, 0]]);
    }
}
