//! Likelihood-ratio label correction and its closed-form thresholds.
//!
//! For a sample with noisy label `y` and classifier output `f(x)`, the
//! likelihood ratio `LR = f_y(x) / f_m(x)` (with `m` the argmax of `f`)
//! measures how defensible the current label is. Correction rejects the label
//! and flips it to `m` exactly when `LR` falls strictly below a threshold
//! `delta`. The companion functions compute the threshold values for which
//! the correction error admits closed-form guarantees.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::ConditionalModel;
use crate::transition::TransitionMatrix;
use crate::types::{ClassLabel, ProbVector};

/// Outcome of the likelihood-ratio test for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionDecision {
    pub sample_index: usize,
    /// `f_y / f_m`, always in `[0, 1]`.
    pub lr: f64,
    /// Whether the label was rejected (`lr` strictly below the threshold).
    pub rejected: bool,
    /// The label after the test: the argmax on rejection, else the input.
    pub new_label: ClassLabel,
    /// The argmax of `f` at this sample.
    pub argmax_label: ClassLabel,
}

/// Aggregate of a dataset-level correction pass.
#[derive(Debug, Clone)]
pub struct CorrectionReport {
    pub decisions: Vec<CorrectionDecision>,
    /// Number of rejected (flipped) samples.
    pub n_flipped: usize,
    /// Fraction of corrected labels equal to the Bayes labels, when present.
    pub agreement_with_bayes: Option<f64>,
    /// The effective threshold applied (input clamped to at most 1).
    pub delta_used: f64,
}

/// `f_y / f_max`. Returns 1 when the label already is the argmax, and 1 for
/// the degenerate all-zero guard case (`f_max = 0`), which therefore never
/// triggers a rejection.
pub fn likelihood_ratio(f: &ProbVector, noisy: ClassLabel) -> f64 {
    let max = f.get(f.argmax());
    if max == 0.0 {
        return 1.0;
    }
    f.get(noisy) / max
}

fn decide(
    f: &ProbVector,
    noisy: ClassLabel,
    delta_eff: f64,
) -> (f64, bool, ClassLabel, ClassLabel) {
    let argmax = f.argmax();
    let lr = likelihood_ratio(f, noisy);
    let rejected = lr < delta_eff;
    let new_label = if rejected { argmax } else { noisy };
    (lr, rejected, new_label, argmax)
}

fn effective_delta(delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::Parameter(format!(
            "threshold {delta} must be finite and nonnegative"
        )));
    }
    // Values above 1 reject everything a threshold of 1 rejects; clamping
    // makes that explicit (a ratio never exceeds 1).
    Ok(delta.min(1.0))
}

/// Tests one sample against threshold `delta`.
///
/// At `delta = 0` nothing is ever rejected (the comparison is strict, and a
/// literal-zero `f_y` still satisfies `0 < delta` only for positive `delta`).
/// Thresholds above 1 behave like 1: every label that is not already the
/// argmax of `f` is flipped, up to exact ties.
pub fn lrt_correct<M: ConditionalModel>(
    x: &[f64],
    noisy: ClassLabel,
    f: &M,
    delta: f64,
) -> Result<CorrectionDecision> {
    let delta_eff = effective_delta(delta)?;
    let probs = f.predict(x);
    let (lr, rejected, new_label, argmax_label) = decide(&probs, noisy, delta_eff);
    Ok(CorrectionDecision {
        sample_index: 0,
        lr,
        rejected,
        new_label,
        argmax_label,
    })
}

/// Applies the test to every sample and returns the corrected dataset along
/// with the per-sample decisions. The input dataset is untouched; the output
/// carries the corrected labels as its noisy labels.
pub fn lrt_correct_dataset<M: ConditionalModel>(
    data: &LabeledDataset,
    f: &M,
    delta: f64,
) -> Result<(LabeledDataset, CorrectionReport)> {
    let delta_eff = effective_delta(delta)?;
    if f.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "model has {} classes but dataset has {}",
            f.n_classes(),
            data.n_classes()
        )));
    }
    let mut decisions = Vec::with_capacity(data.len());
    let mut new_labels = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let probs = f.predict(data.feature(i));
        let (lr, rejected, new_label, argmax_label) =
            decide(&probs, data.noisy_labels()[i], delta_eff);
        new_labels.push(new_label);
        decisions.push(CorrectionDecision {
            sample_index: i,
            lr,
            rejected,
            new_label,
            argmax_label,
        });
    }
    let n_flipped = decisions.iter().filter(|d| d.rejected).count();
    let agreement_with_bayes = data.bayes_labels().map(|bayes| {
        let hits = new_labels.iter().zip(bayes).filter(|(a, b)| a == b).count();
        hits as f64 / data.len() as f64
    });
    let mut corrected = data.clone();
    corrected.set_noisy_labels(new_labels)?;
    Ok((
        corrected,
        CorrectionReport {
            decisions,
            n_flipped,
            agreement_with_bayes,
            delta_used: delta_eff,
        },
    ))
}

/// Binary confidence threshold `(1 - |tau10 - tau01|) / 2`: below it, a noisy
/// label that agrees with the Bayes label is provably rare for any classifier
/// close to the noisy conditional probability.
pub fn confidence_threshold_binary(tau: &TransitionMatrix) -> Result<f64> {
    let (t10, t01) = tau.binary_rates()?;
    Ok((1.0 - (t10 - t01).abs()) / 2.0)
}

/// Noisy probability mass that class `target` would receive at `x` if the
/// clean probability of `target` itself were replaced by `substitute`:
/// `tau[target][target] * substitute + sum_{j != target} tau[j][target] * eta_j`.
fn reweighted_mass(
    eta: &ProbVector,
    tau: &TransitionMatrix,
    target: ClassLabel,
    substitute: f64,
) -> f64 {
    let mut total = tau.get(target, target) * substitute;
    for j in 0..eta.n_classes() {
        if j != target {
            total += tau.get(j, target) * eta.get(j);
        }
    }
    total
}

/// Multiclass confidence threshold: the dataset minimum, over samples with
/// noisy label `y`, of the noisy mass class `y` would receive if the clean
/// probability of `y` were replaced by the runner-up probability, capped at 1.
pub fn confidence_threshold_multiclass<M: ConditionalModel>(
    eta: &M,
    tau: &TransitionMatrix,
    data: &LabeledDataset,
) -> Result<f64> {
    check_dims(eta, tau, data)?;
    let mut min = f64::INFINITY;
    for i in 0..data.len() {
        let p = eta.predict(data.feature(i));
        let (_, second) = p.top_two();
        let value = reweighted_mass(&p, tau, data.noisy_labels()[i], p.get(second));
        min = min.min(value);
    }
    Ok(min.min(1.0))
}

/// Threshold maximizing flip coverage with a guarantee: the dataset minimum
/// of the multiclass threshold expression divided by the classifier's top
/// probability. Labels below it are flipped by the test whenever the
/// classifier is accurate enough.
pub fn critical_value_sensitivity<E, F>(
    eta: &E,
    tau: &TransitionMatrix,
    f: &F,
    data: &LabeledDataset,
) -> Result<f64>
where
    E: ConditionalModel,
    F: ConditionalModel,
{
    check_dims(eta, tau, data)?;
    if f.n_classes() != data.n_classes() {
        return Err(Error::Parameter("classifier class count mismatch".into()));
    }
    let mut min = f64::INFINITY;
    for i in 0..data.len() {
        let p = eta.predict(data.feature(i));
        let (_, second) = p.top_two();
        let numerator = reweighted_mass(&p, tau, data.noisy_labels()[i], p.get(second));
        let probs = f.predict(data.feature(i));
        let denominator = probs.get(probs.argmax());
        if denominator == 0.0 {
            return Err(Error::DegenerateClassifier(format!(
                "classifier assigns zero mass to every class at sample {i}"
            )));
        }
        min = min.min(numerator / denominator);
    }
    Ok(min)
}

/// Threshold minimizing wrong keeps: the dataset maximum of the classifier's
/// noisy-label probability divided by the noisy mass the classifier's argmax
/// class would receive with its clean probability replaced by the runner-up.
/// Values above 1 are returned as computed; callers should surface them to
/// the user since they make the test flip everything short of exact ties.
pub fn critical_value_specificity<E, F>(
    eta: &E,
    tau: &TransitionMatrix,
    f: &F,
    data: &LabeledDataset,
) -> Result<f64>
where
    E: ConditionalModel,
    F: ConditionalModel,
{
    check_dims(eta, tau, data)?;
    if f.n_classes() != data.n_classes() {
        return Err(Error::Parameter("classifier class count mismatch".into()));
    }
    let mut max = f64::NEG_INFINITY;
    for i in 0..data.len() {
        let p = eta.predict(data.feature(i));
        let (_, second) = p.top_two();
        let probs = f.predict(data.feature(i));
        let m = probs.argmax();
        let denominator = reweighted_mass(&p, tau, m, p.get(second));
        if denominator == 0.0 {
            return Err(Error::DegenerateClassifier(format!(
                "zero reference mass for the argmax class at sample {i}"
            )));
        }
        max = max.max(probs.get(data.noisy_labels()[i]) / denominator);
    }
    Ok(max)
}

/// Binary threshold `(1 - |tau10 - tau01|) / (1 + |tau10 - tau01|)` for which
/// the correction error admits the binary closed-form guarantee.
pub fn critical_value_binary(tau: &TransitionMatrix) -> Result<f64> {
    let (t10, t01) = tau.binary_rates()?;
    let gap = (t10 - t01).abs();
    Ok((1.0 - gap) / (1.0 + gap))
}

fn check_dims<M: ConditionalModel>(
    eta: &M,
    tau: &TransitionMatrix,
    data: &LabeledDataset,
) -> Result<()> {
    if eta.n_classes() != data.n_classes() || tau.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "class counts disagree: model {}, matrix {}, dataset {}",
            eta.n_classes(),
            tau.n_classes(),
            data.n_classes()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compose_noisy;
    use crate::rng::RandomSource;
    use crate::synth::{bayes_labels, sample_dataset, GaussianMixtureSpec};
    use approx::assert_abs_diff_eq;

    struct Fixed(Vec<f64>);

    impl ConditionalModel for Fixed {
        fn n_classes(&self) -> usize {
            self.0.len()
        }
        fn predict(&self, _x: &[f64]) -> ProbVector {
            ProbVector::new_unchecked(self.0.clone())
        }
    }

    #[test]
    fn ratio_from_definition() {
        let f = ProbVector::new(vec![0.7, 0.2, 0.1]).unwrap();
        assert_abs_diff_eq!(likelihood_ratio(&f, 1), 0.2 / 0.7, epsilon = 1e-15);
        assert_eq!(likelihood_ratio(&f, 0), 1.0);
    }

    #[test]
    fn ratio_of_tied_entries_is_one() {
        let f = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(likelihood_ratio(&f, 1), 1.0);
        assert_eq!(likelihood_ratio(&f, 0), 1.0);
    }

    #[test]
    fn correction_rejects_below_threshold_only() {
        let f = Fixed(vec![0.7, 0.2, 0.1]);
        let d = lrt_correct(&[0.0], 1, &f, 0.5).unwrap();
        assert!(d.rejected);
        assert_eq!(d.new_label, 0);
        let d = lrt_correct(&[0.0], 1, &f, 0.2).unwrap();
        assert!(!d.rejected);
        assert_eq!(d.new_label, 1);
    }

    #[test]
    fn argmax_label_never_flips_for_threshold_at_most_one() {
        let f = Fixed(vec![0.7, 0.2, 0.1]);
        for &delta in &[0.1, 0.5, 1.0] {
            let d = lrt_correct(&[0.0], 0, &f, delta).unwrap();
            assert!(!d.rejected);
        }
    }

    #[test]
    fn zero_threshold_never_flips_and_tiny_threshold_flips_exact_zeros() {
        let f = Fixed(vec![1.0, 0.0]);
        let d = lrt_correct(&[0.0], 1, &f, 0.0).unwrap();
        assert!(
            !d.rejected,
            "strict comparison keeps zero-ratio labels at threshold 0"
        );
        let d = lrt_correct(&[0.0], 1, &f, 1e-300).unwrap();
        assert!(
            d.rejected,
            "any positive threshold flips a literal-zero ratio"
        );
    }

    #[test]
    fn thresholds_above_one_flip_everything_not_argmax() {
        let f = Fixed(vec![0.6, 0.4]);
        let d = lrt_correct(&[0.0], 1, &f, 2.5).unwrap();
        assert!(d.rejected);
        let d = lrt_correct(&[0.0], 0, &f, 2.5).unwrap();
        assert!(!d.rejected, "argmax labels survive even clamped thresholds");
    }

    #[test]
    fn uniform_classifier_is_inert() {
        let f = Fixed(vec![0.25; 4]);
        for y in 0..4 {
            let d = lrt_correct(&[0.0], y, &f, 1.0).unwrap();
            assert!(!d.rejected);
        }
    }

    #[test]
    fn oracle_correction_recovers_bayes_under_symmetric_noise() {
        let spec = GaussianMixtureSpec::binary_benchmark();
        let eta = spec.exact_eta();
        let tau = TransitionMatrix::binary(0.3, 0.3).unwrap();
        let data = sample_dataset(&spec, 10_000, RandomSource::new(21));
        let data = bayes_labels(&eta, &data).unwrap();
        let data = crate::noise::inject_noise(&data, &tau, RandomSource::new(22)).unwrap();
        let noisy_model = compose_noisy(&eta, tau).unwrap();
        let (corrected, report) = lrt_correct_dataset(&data, &noisy_model, 1.0).unwrap();
        assert_eq!(corrected.noisy_labels(), data.bayes_labels().unwrap());
        assert_eq!(report.agreement_with_bayes, Some(1.0));
        assert_eq!(report.delta_used, 1.0);
    }

    #[test]
    fn dataset_correction_preserves_input_and_counts_flips() {
        let ds = LabeledDataset::new(vec![0.0, 1.0, 2.0], 1, 2, vec![1, 1, 0]).unwrap();
        let f = Fixed(vec![0.9, 0.1]);
        let (corrected, report) = lrt_correct_dataset(&ds, &f, 0.5).unwrap();
        assert_eq!(ds.noisy_labels(), &[1, 1, 0]);
        assert_eq!(corrected.noisy_labels(), &[0, 0, 0]);
        assert_eq!(report.n_flipped, 2);
        assert_eq!(report.agreement_with_bayes, None);
        assert!(report.decisions[0].rejected);
        assert!(!report.decisions[2].rejected);
    }

    #[test]
    fn binary_confidence_threshold_values() {
        let sym = TransitionMatrix::binary(0.3, 0.3).unwrap();
        assert_abs_diff_eq!(confidence_threshold_binary(&sym).unwrap(), 0.5);
        let asym = TransitionMatrix::binary(0.2, 0.3).unwrap();
        assert_abs_diff_eq!(confidence_threshold_binary(&asym).unwrap(), 0.45);
        let one_sided = TransitionMatrix::binary(0.3, 0.0).unwrap();
        assert_abs_diff_eq!(confidence_threshold_binary(&one_sided).unwrap(), 0.35);
        let multi = TransitionMatrix::uniform_flip(3, 0.3).unwrap();
        assert!(confidence_threshold_binary(&multi).is_err());
    }

    #[test]
    fn binary_critical_values() {
        let sym = TransitionMatrix::binary(0.3, 0.3).unwrap();
        assert_abs_diff_eq!(critical_value_binary(&sym).unwrap(), 1.0);
        let asym = TransitionMatrix::binary(0.2, 0.3).unwrap();
        assert_abs_diff_eq!(
            critical_value_binary(&asym).unwrap(),
            0.9 / 1.1,
            epsilon = 1e-15
        );
        let one_sided = TransitionMatrix::binary(0.3, 0.0).unwrap();
        assert_abs_diff_eq!(
            critical_value_binary(&one_sided).unwrap(),
            0.7 / 1.3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn multiclass_threshold_uniform_configuration() {
        let tau = TransitionMatrix::uniform_flip(3, 0.3).unwrap();
        let eta = Fixed(vec![1.0 / 3.0; 3]);
        let ds = LabeledDataset::new(vec![0.0, 1.0, 2.0], 1, 3, vec![0, 1, 2]).unwrap();
        let delta = confidence_threshold_multiclass(&eta, &tau, &ds).unwrap();
        assert_abs_diff_eq!(delta, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn multiclass_threshold_certain_labels_drop_to_zero() {
        let tau = TransitionMatrix::identity(2);
        let eta = Fixed(vec![1.0, 0.0]);
        let ds = LabeledDataset::new(vec![0.0], 1, 2, vec![0]).unwrap();
        let delta = confidence_threshold_multiclass(&eta, &tau, &ds).unwrap();
        assert_eq!(delta, 0.0);
    }

    #[test]
    fn multiclass_threshold_matches_binary_construction_for_oracle() {
        let spec = GaussianMixtureSpec::binary_benchmark();
        let eta = spec.exact_eta();
        let tau = TransitionMatrix::binary(0.3, 0.3).unwrap();
        let data = sample_dataset(&spec, 1_000, RandomSource::new(31));
        let delta = confidence_threshold_multiclass(&eta, &tau, &data).unwrap();
        // Per sample the expression is 0.7 * min(eta) + 0.3 * max(eta) when
        // the noisy label is the majority class, approaching 0.5 as the
        // sample's margin vanishes; the dataset minimum sits just below it.
        assert!(delta <= 0.5 + 1e-12, "threshold {delta}");
        let mut brute = f64::INFINITY;
        for i in 0..data.len() {
            let p = eta.predict(data.feature(i));
            let y = data.noisy_labels()[i];
            let (_, s) = p.top_two();
            brute = brute.min(0.7 * p.get(s) + 0.3 * p.get(1 - y));
        }
        assert_abs_diff_eq!(delta, brute.min(1.0), epsilon = 1e-12);
    }

    #[test]
    fn sensitivity_critical_value_uniform_configuration() {
        let tau = TransitionMatrix::uniform_flip(3, 0.3).unwrap();
        let eta = Fixed(vec![1.0 / 3.0; 3]);
        let ds = LabeledDataset::new(vec![0.0, 1.0], 1, 3, vec![0, 2]).unwrap();
        let v = critical_value_sensitivity(&eta, &tau, &eta, &ds).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sensitivity_critical_value_identity_noise() {
        let spec = GaussianMixtureSpec::binary_benchmark();
        let eta = spec.exact_eta();
        let tau = TransitionMatrix::identity(2);
        let data = sample_dataset(&spec, 500, RandomSource::new(41));
        let v = critical_value_sensitivity(&eta, &tau, &eta, &data).unwrap();
        let mut brute = f64::INFINITY;
        for i in 0..data.len() {
            let p = eta.predict(data.feature(i));
            let (m, s) = p.top_two();
            brute = brute.min(p.get(s) / p.get(m));
        }
        assert_abs_diff_eq!(v, brute, epsilon = 1e-12);
        assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn specificity_critical_value_uniform_configuration() {
        let tau = TransitionMatrix::uniform_flip(3, 0.3).unwrap();
        let eta = Fixed(vec![1.0 / 3.0; 3]);
        let ds = LabeledDataset::new(vec![0.0], 1, 3, vec![1]).unwrap();
        let v = critical_value_specificity(&eta, &tau, &eta, &ds).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn specificity_critical_value_matches_brute_force() {
        let spec = GaussianMixtureSpec::binary_benchmark();
        let eta = spec.exact_eta();
        let tau = TransitionMatrix::binary(0.2, 0.3).unwrap();
        let data = sample_dataset(&spec, 500, RandomSource::new(43));
        let data = crate::noise::inject_noise(&data, &tau, RandomSource::new(44)).unwrap();
        let noisy_model = compose_noisy(&eta, tau.clone()).unwrap();
        let v = critical_value_specificity(&eta, &tau, &noisy_model, &data).unwrap();
        let mut brute = f64::NEG_INFINITY;
        for i in 0..data.len() {
            let p = eta.predict(data.feature(i));
            let probs = noisy_model.predict(data.feature(i));
            let m = probs.argmax();
            let (_, s) = p.top_two();
            let denom = reweighted_mass(&p, &tau, m, p.get(s));
            brute = brute.max(probs.get(data.noisy_labels()[i]) / denom);
        }
        assert_abs_diff_eq!(v, brute, epsilon = 1e-12);
    }

    #[test]
    fn negative_threshold_is_rejected() {
        let f = Fixed(vec![0.5, 0.5]);
        assert!(lrt_correct(&[0.0], 0, &f, -0.1).is_err());
        assert!(lrt_correct(&[0.0], 0, &f, f64::NAN).is_err());
    }
}
