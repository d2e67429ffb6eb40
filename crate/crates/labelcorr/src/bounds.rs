//! Margin-condition constant estimation and closed-form error bounds.
//!
//! The margin condition states that the probability mass near the decision
//! boundary decays polynomially: `Pr[margin <= t] <= C t^lambda` for
//! `t` up to a ceiling `t0`. [`fit_tsybakov`] estimates `C` and `lambda` by
//! ordinary least squares on the log-log curve of empirical band
//! probabilities. The bound evaluators turn a fitted pair `(C, lambda)`, a
//! transition matrix, and a classifier approximation error `epsilon` into
//! the closed-form guarantees on joint events and correction error.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::ConditionalModel;
use crate::transition::TransitionMatrix;
use crate::types::ProbVector;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Default margin ceiling for two-class data.
pub const DEFAULT_CEILING_BINARY: f64 = 0.5;
/// Default margin ceiling for data with three or more classes.
pub const DEFAULT_CEILING_MULTICLASS: f64 = 1.0;

/// Result of fitting `p_t = C t^lambda` on a grid of band probabilities.
///
/// `t_grid` and `p_t` always hold the full evaluated grid; the counters
/// record how many points the regression actually consumed and why the rest
/// were dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsybakovFit {
    pub c: f64,
    pub lambda: f64,
    pub r_squared: f64,
    /// Two-sided p-value of the slope under the standard linear-model t-test.
    pub p_value: f64,
    pub t_grid: Vec<f64>,
    pub p_t: Vec<f64>,
    /// Grid points used by the regression.
    pub n_used: usize,
    /// Grid points dropped because `p_t = 0` (log undefined).
    pub n_zero: usize,
    /// Grid points dropped because `t` exceeds the margin ceiling, where the
    /// power law is not assumed to hold.
    pub n_beyond_ceiling: usize,
}

/// Which side of the likelihood-ratio test a bound covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Error among samples whose label the test rejects (flips).
    Reject,
    /// Error among samples whose label the test accepts (keeps).
    Accept,
}

/// A bound value together with whether the validity condition of its
/// derivation holds for the supplied inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub valid: bool,
}

/// Identifies which closed form produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    BinaryJoint,
    MulticlassJoint,
    BinaryCorrection,
    ExactReject,
    ExactAccept,
    ApproxReject,
    ApproxAccept,
}

/// A bound evaluated over a grid of approximation errors, optionally paired
/// with the matching empirical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub epsilons: Vec<f64>,
    pub bound_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_values: Option<Vec<f64>>,
    pub kind: BoundKind,
}

impl BoundCurve {
    /// Validates lengths, ordering of the epsilon grid, and nonnegativity.
    pub fn new(
        epsilons: Vec<f64>,
        bound_values: Vec<f64>,
        empirical_values: Option<Vec<f64>>,
        kind: BoundKind,
    ) -> Result<Self> {
        if bound_values.len() != epsilons.len() {
            return Err(Error::Parameter(format!(
                "{} bound values for {} epsilons",
                bound_values.len(),
                epsilons.len()
            )));
        }
        if let Some(emp) = &empirical_values {
            if emp.len() != epsilons.len() {
                return Err(Error::Parameter(format!(
                    "{} empirical values for {} epsilons",
                    emp.len(),
                    epsilons.len()
                )));
            }
        }
        if epsilons.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parameter(
                "epsilon grid must be sorted ascending".into(),
            ));
        }
        if bound_values.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::Parameter("bound values must be nonnegative".into()));
        }
        Ok(Self {
            epsilons,
            bound_values,
            empirical_values,
            kind,
        })
    }
}

fn margin_statistic(p: &ProbVector) -> f64 {
    if p.n_classes() == 2 {
        (p.get(1) - 0.5).abs()
    } else {
        let (top, second) = p.top_two();
        p.get(top) - p.get(second)
    }
}

/// Empirical fraction of samples within margin `t` of the decision boundary:
/// `|eta_1 - 1/2| <= t` for two classes, top-two gap `<= t` otherwise.
pub fn margin_probability<M: ConditionalModel>(
    eta: &M,
    data: &LabeledDataset,
    t: f64,
) -> Result<f64> {
    let stats = margin_statistics(eta, data)?;
    let hits = stats.iter().filter(|&&s| s <= t).count();
    Ok(hits as f64 / data.len() as f64)
}

fn margin_statistics<M: ConditionalModel>(eta: &M, data: &LabeledDataset) -> Result<Vec<f64>> {
    if eta.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "model has {} classes but dataset has {}",
            eta.n_classes(),
            data.n_classes()
        )));
    }
    Ok((0..data.len())
        .map(|i| margin_statistic(&eta.predict(data.feature(i))))
        .collect())
}

/// Default margin ceiling for a class count.
pub fn default_ceiling(n_classes: usize) -> f64 {
    if n_classes == 2 {
        DEFAULT_CEILING_BINARY
    } else {
        DEFAULT_CEILING_MULTICLASS
    }
}

/// Fits the margin-condition constants on an evenly spaced grid over
/// `[t_min, t_max]`, using the default margin ceiling for the dataset's
/// class count.
pub fn fit_tsybakov<M: ConditionalModel>(
    eta: &M,
    data: &LabeledDataset,
    t_min: f64,
    t_max: f64,
    n_grid: usize,
) -> Result<TsybakovFit> {
    fit_tsybakov_with_ceiling(
        eta,
        data,
        t_min,
        t_max,
        n_grid,
        default_ceiling(data.n_classes()),
    )
}

/// As [`fit_tsybakov`] with an explicit margin ceiling. Band probabilities
/// are evaluated on the full grid; the regression uses only points with
/// `p_t > 0` and `t` at most the ceiling, since beyond the ceiling the power
/// law is not assumed and the curve flattens toward 1.
pub fn fit_tsybakov_with_ceiling<M: ConditionalModel>(
    eta: &M,
    data: &LabeledDataset,
    t_min: f64,
    t_max: f64,
    n_grid: usize,
    ceiling: f64,
) -> Result<TsybakovFit> {
    if !(t_min > 0.0 && t_min < t_max && t_max <= 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 < t_min < t_max <= 1, got [{t_min}, {t_max}]"
        )));
    }
    if n_grid < 3 {
        return Err(Error::Parameter(format!(
            "grid needs at least 3 points, got {n_grid}"
        )));
    }
    let stats = margin_statistics(eta, data)?;
    let n = data.len() as f64;
    let step = (t_max - t_min) / (n_grid - 1) as f64;
    let t_grid: Vec<f64> = (0..n_grid).map(|k| t_min + k as f64 * step).collect();
    let p_t: Vec<f64> = t_grid
        .iter()
        .map(|&t| stats.iter().filter(|&&s| s <= t).count() as f64 / n)
        .collect();
    fit_power_law(&t_grid, &p_t, ceiling)
}

/// Ordinary least squares of `log p` on `log t`, dropping points with
/// `p = 0` and points with `t` beyond `ceiling`. Returns the power-law
/// constants `C = exp(intercept)`, `lambda = slope`, the coefficient of
/// determination on the used points, and the two-sided slope p-value.
pub fn fit_power_law(t_grid: &[f64], p_t: &[f64], ceiling: f64) -> Result<TsybakovFit> {
    if t_grid.len() != p_t.len() {
        return Err(Error::Parameter(format!(
            "{} probabilities for {} grid points",
            p_t.len(),
            t_grid.len()
        )));
    }
    if ceiling.is_nan() || ceiling <= 0.0 {
        return Err(Error::Parameter(format!(
            "ceiling {ceiling} must be positive"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut n_zero = 0;
    let mut n_beyond = 0;
    for (&t, &p) in t_grid.iter().zip(p_t) {
        if !t.is_finite() || t <= 0.0 || !p.is_finite() || p < 0.0 {
            return Err(Error::Parameter(format!(
                "grid point (t={t}, p={p}) must be finite with t > 0 and p >= 0"
            )));
        }
        if p == 0.0 {
            n_zero += 1;
        } else if t > ceiling {
            n_beyond += 1;
        } else {
            xs.push(t.ln());
            ys.push(p.ln());
        }
    }
    let used = xs.len();
    if used < 3 {
        return Err(Error::InsufficientData(format!(
            "{used} usable grid points ({n_zero} with p=0, {n_beyond} beyond ceiling); need 3"
        )));
    }
    let nf = used as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(Error::Numerical(
            "grid points coincide, slope undefined".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        let resid = y - (intercept + slope * x);
        sse += resid * resid;
        sst += (y - y_mean) * (y - y_mean);
    }
    let r_squared = if sst == 0.0 {
        1.0
    } else {
        (1.0 - sse / sst).clamp(0.0, 1.0)
    };
    let dof = nf - 2.0;
    let se_slope = (sse / dof / sxx).sqrt();
    let p_value = if se_slope == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t_stat = (slope / se_slope).abs();
        let dist = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::Numerical(format!("t distribution with {dof} dof: {e}")))?;
        (2.0 * (1.0 - dist.cdf(t_stat))).clamp(0.0, 1.0)
    };
    Ok(TsybakovFit {
        c: intercept.exp(),
        lambda: slope,
        r_squared,
        p_value,
        t_grid: t_grid.to_vec(),
        p_t: p_t.to_vec(),
        n_used: used,
        n_zero,
        n_beyond_ceiling: n_beyond,
    })
}

/// Largest per-class disagreement `max_{x,i} |f_i(x) - g_i(x)|` over the
/// dataset.
pub fn sup_norm_error<F, G>(f: &F, reference: &G, data: &LabeledDataset) -> Result<f64>
where
    F: ConditionalModel,
    G: ConditionalModel,
{
    if f.n_classes() != reference.n_classes() {
        return Err(Error::Parameter(format!(
            "class counts disagree: {} vs {}",
            f.n_classes(),
            reference.n_classes()
        )));
    }
    let mut max = 0.0_f64;
    for i in 0..data.len() {
        let x = data.feature(i);
        let a = f.predict(x);
        let b = reference.predict(x);
        for c in 0..a.n_classes() {
            max = max.max((a.get(c) - b.get(c)).abs());
        }
    }
    Ok(max)
}

fn check_fit_and_epsilon(epsilon: f64, fit: &TsybakovFit, t0: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Parameter(format!(
            "epsilon {epsilon} must be finite and nonnegative"
        )));
    }
    if !fit.c.is_finite() || fit.c <= 0.0 || !fit.lambda.is_finite() || fit.lambda <= 0.0 {
        return Err(Error::Parameter(format!(
            "fit constants C={}, lambda={} must be positive",
            fit.c, fit.lambda
        )));
    }
    if !t0.is_finite() || t0 <= 0.0 {
        return Err(Error::Parameter(format!(
            "t0 {t0} must be finite and positive"
        )));
    }
    Ok(())
}

/// Bound on the probability that a noisy label is simultaneously correct and
/// assigned probability below the binary confidence threshold:
/// `2 C (epsilon / (1 - tau01 - tau10))^lambda`, the sum of the two
/// disjoint-case bounds. Valid while `epsilon <= t0 (1 - tau10 - tau01)`.
pub fn joint_bound_binary(
    epsilon: f64,
    fit: &TsybakovFit,
    tau: &TransitionMatrix,
    t0: f64,
) -> Result<Bound> {
    check_fit_and_epsilon(epsilon, fit, t0)?;
    let (t10, t01) = tau.binary_rates()?;
    let shrink = 1.0 - t10 - t01;
    Ok(Bound {
        value: 2.0 * fit.c * (epsilon / shrink).powf(fit.lambda),
        valid: epsilon <= t0 * shrink,
    })
}

/// Multiclass analogue of [`joint_bound_binary`] with the worst diagonal
/// entry: `C (epsilon / min_i tau_ii)^lambda`, valid while
/// `epsilon <= t0 min_i tau_ii`.
pub fn joint_bound_multiclass(
    epsilon: f64,
    fit: &TsybakovFit,
    tau: &TransitionMatrix,
    t0: f64,
) -> Result<Bound> {
    check_fit_and_epsilon(epsilon, fit, t0)?;
    let min_tau = positive_min_diagonal(tau)?;
    Ok(Bound {
        value: fit.c * (epsilon / min_tau).powf(fit.lambda),
        valid: epsilon <= t0 * min_tau,
    })
}

/// Bound on the error of likelihood-ratio correction with the optimal binary
/// threshold: `C (|tau10 - tau01| / (2s) + epsilon / s)^lambda` with
/// `s = 1 - tau10 - tau01`. Valid while `epsilon <= t0 s - |tau10 - tau01| / 2`.
pub fn correction_bound_binary(
    epsilon: f64,
    fit: &TsybakovFit,
    tau: &TransitionMatrix,
    t0: f64,
) -> Result<Bound> {
    check_fit_and_epsilon(epsilon, fit, t0)?;
    let (t10, t01) = tau.binary_rates()?;
    let shrink = 1.0 - t10 - t01;
    let gap = (t10 - t01).abs();
    Ok(Bound {
        value: fit.c * (gap / (2.0 * shrink) + epsilon / shrink).powf(fit.lambda),
        valid: epsilon <= t0 * shrink - gap / 2.0,
    })
}

/// Per-side correction-error bound for a threshold computed from the exact
/// classifier: `C (epsilon / min_i tau_ii)^lambda + residual`. The power-law
/// term is the same on both sides; `side` documents which residual estimate
/// the caller supplies. Valid while `epsilon <= t0 min_i tau_ii`.
pub fn correction_bound_exact(
    epsilon: f64,
    fit: &TsybakovFit,
    tau: &TransitionMatrix,
    residual: f64,
    side: Side,
    t0: f64,
) -> Result<Bound> {
    correction_bound_approx(epsilon, 0.0, 1.0, fit, tau, residual, side, t0)
}

/// Per-side correction-error bound for a threshold known only up to an
/// additive error `xi < delta`:
/// reject side `C ((epsilon + xi) / min_tau)^lambda + residual`, accept side
/// `C (epsilon / min_tau + xi / (delta^2 min_tau) + xi^2 / (delta^2 min_tau))^lambda + residual`.
/// Valid while `epsilon <= min((t0 delta^2 min_tau - xi^2 - xi) / delta^2, (t0 - xi) min_tau)`.
/// With `xi = 0` both sides reduce exactly to [`correction_bound_exact`].
#[allow(clippy::too_many_arguments)]
pub fn correction_bound_approx(
    epsilon: f64,
    xi: f64,
    delta: f64,
    fit: &TsybakovFit,
    tau: &TransitionMatrix,
    residual: f64,
    side: Side,
    t0: f64,
) -> Result<Bound> {
    check_fit_and_epsilon(epsilon, fit, t0)?;
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::Parameter(format!(
            "xi {xi} must be finite and nonnegative"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Parameter(format!(
            "delta {delta} must be finite and positive"
        )));
    }
    if xi >= delta {
        return Err(Error::Parameter(format!(
            "threshold error xi = {xi} must be below the threshold delta = {delta}"
        )));
    }
    if !(0.0..=1.0).contains(&residual) {
        return Err(Error::Parameter(format!(
            "residual {residual} must lie in [0, 1]"
        )));
    }
    let min_tau = positive_min_diagonal(tau)?;
    let d2 = delta * delta;
    let base = match side {
        Side::Reject => (epsilon + xi) / min_tau,
        Side::Accept => epsilon / min_tau + xi / (d2 * min_tau) + xi * xi / (d2 * min_tau),
    };
    let limit = ((t0 * d2 * min_tau - xi * xi - xi) / d2).min((t0 - xi) * min_tau);
    Ok(Bound {
        value: fit.c * base.powf(fit.lambda) + residual,
        valid: epsilon <= limit,
    })
}

fn positive_min_diagonal(tau: &TransitionMatrix) -> Result<f64> {
    let min_tau = tau.min_diagonal();
    if min_tau <= 0.0 {
        return Err(Error::Parameter(format!(
            "smallest diagonal entry {min_tau} must be positive"
        )));
    }
    Ok(min_tau)
}

/// Empirical probability of the joint event bounded by the joint bounds: the
/// fraction of samples whose noisy label equals the Bayes label while the
/// classifier assigns it probability strictly below `threshold`.
pub fn empirical_joint<M: ConditionalModel>(
    f: &M,
    data: &LabeledDataset,
    threshold: f64,
) -> Result<f64> {
    let bayes = data.require_bayes_labels()?;
    if f.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "model has {} classes but dataset has {}",
            f.n_classes(),
            data.n_classes()
        )));
    }
    let mut hits = 0usize;
    for (i, &b) in bayes.iter().enumerate() {
        let y = data.noisy_labels()[i];
        if y == b && f.predict(data.feature(i)).get(y) < threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Fraction of samples whose (corrected) noisy label differs from the Bayes
/// label.
pub fn empirical_correction_error(corrected: &LabeledDataset) -> Result<f64> {
    let bayes = corrected.require_bayes_labels()?;
    let misses = corrected
        .noisy_labels()
        .iter()
        .zip(bayes)
        .filter(|(a, b)| a != b)
        .count();
    Ok(misses as f64 / corrected.len() as f64)
}

/// Fraction of samples whose Bayes-optimal class (argmax of the oracle
/// `eta`) is neither the classifier argmax nor the noisy label. This is the
/// residual event the per-side correction bounds cannot cover. It is 0
/// whenever the classifier's argmax agrees with the oracle's everywhere
/// (in particular for the oracle noisy composition under symmetric noise,
/// which preserves the argmax).
pub fn empirical_residual<E, F>(eta: &E, f: &F, data: &LabeledDataset) -> Result<f64>
where
    E: ConditionalModel,
    F: ConditionalModel,
{
    if eta.n_classes() != data.n_classes() || f.n_classes() != data.n_classes() {
        return Err(Error::Parameter("class counts disagree".into()));
    }
    let mut hits = 0usize;
    for i in 0..data.len() {
        let x = data.feature(i);
        let u = eta.predict(x).argmax();
        if u != f.predict(x).argmax() && u != data.noisy_labels()[i] {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}
