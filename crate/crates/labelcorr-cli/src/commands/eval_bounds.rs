//! `eval-bounds`: run a configured experiment and compare every applicable
//! closed-form bound against its empirical counterpart.
//!
//! The pipeline is self-contained: draw the mixture, attach Bayes labels,
//! corrupt the labels, fit the margin constants, then for each perturbation
//! level evaluate the bounds next to the measured error rates. Binary
//! experiments produce the joint and correction bounds; multiclass
//! experiments produce the joint bound and the per-side bounds for the
//! exact threshold, plus the approximate-threshold sides when the config
//! assumes a threshold error.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use labelcorr::bounds::{
    correction_bound_approx, correction_bound_binary, correction_bound_exact, default_ceiling,
    empirical_correction_error, empirical_joint, empirical_residual, fit_tsybakov_with_ceiling,
    joint_bound_binary, joint_bound_multiclass, BoundKind, Side, TsybakovFit,
};
use labelcorr::lrt::{
    confidence_threshold_binary, confidence_threshold_multiclass, critical_value_binary,
    critical_value_sensitivity, critical_value_specificity, lrt_correct_dataset,
};
use labelcorr::noise::inject_noise;
use labelcorr::synth::{bayes_labels, sample_dataset, ExactEta};
use labelcorr::{
    compose_noisy, ConditionalModel, LabeledDataset, PerturbedModel, RandomSource, TransitionMatrix,
};

use crate::config::{CorrectionMode, ExperimentConfig};
use crate::io::{self, usage, BoundRecord, BoundsDocument, DeltaRecord, Header};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Experiment configuration TOML.
    #[arg(long)]
    pub config: PathBuf,

    /// Output JSON document.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let doc = evaluate(&config)?;
    io::write_json(&args.out, &doc)?;
    let n_valid = doc.records.iter().filter(|r| r.valid).count();
    let n_dominated = doc
        .records
        .iter()
        .filter(|r| r.valid && r.empirical_value <= r.bound_value)
        .count();
    println!(
        "evaluated {} records ({n_valid} valid, {n_dominated} dominated); wrote {}",
        doc.records.len(),
        args.out.display()
    );
    Ok(())
}

/// Runs the configured pipeline and collects every record.
pub fn evaluate(config: &ExperimentConfig) -> anyhow::Result<BoundsDocument> {
    let spec = config.synth.spec()?;
    let eta = spec.exact_eta();
    let data = sample_dataset(&spec, config.synth.n, RandomSource::new(config.synth.seed));
    let data = bayes_labels(&eta, &data)?;
    let tau = config.noise.matrix(spec.n_components())?;
    let noisy = inject_noise(&data, &tau, RandomSource::new(config.noise.seed))?;

    let ceiling = config
        .fit
        .ceiling
        .unwrap_or_else(|| default_ceiling(noisy.n_classes()));
    let fit = fit_tsybakov_with_ceiling(
        &eta,
        &noisy,
        config.fit.t_min,
        config.fit.t_max,
        config.fit.n_grid,
        ceiling,
    )?;

    let oracle = compose_noisy(eta.clone(), tau.clone())?;
    let binary = noisy.n_classes() == 2;
    let joint_threshold = if binary {
        confidence_threshold_binary(&tau)?
    } else {
        confidence_threshold_multiclass(&eta, &tau, &noisy)?
    };

    let mut records = Vec::new();
    let mut deltas = Vec::new();
    for &epsilon in &config.bounds.epsilons {
        let (mut point_records, delta) = if epsilon == 0.0 {
            evaluate_point(
                epsilon,
                &oracle,
                &eta,
                &tau,
                &noisy,
                &fit,
                joint_threshold,
                config,
            )?
        } else {
            let perturbed =
                PerturbedModel::new(oracle.clone(), epsilon, config.bounds.perturb_seed)?;
            evaluate_point(
                epsilon,
                &perturbed,
                &eta,
                &tau,
                &noisy,
                &fit,
                joint_threshold,
                config,
            )?
        };
        records.append(&mut point_records);
        deltas.push(DeltaRecord { epsilon, delta });
    }

    Ok(BoundsDocument {
        header: Header::new("bounds"),
        config: config.clone(),
        fit,
        joint_threshold,
        deltas,
        records,
    })
}

/// Bounds and empirical values at one perturbation level, plus the
/// rejection threshold that was applied.
#[allow(clippy::too_many_arguments)]
fn evaluate_point<M: ConditionalModel>(
    epsilon: f64,
    f: &M,
    eta: &ExactEta,
    tau: &TransitionMatrix,
    noisy: &LabeledDataset,
    fit: &TsybakovFit,
    joint_threshold: f64,
    config: &ExperimentConfig,
) -> anyhow::Result<(Vec<BoundRecord>, f64)> {
    let t0 = config.bounds.t0;
    let binary = noisy.n_classes() == 2;
    let mut records = Vec::new();

    let joint_empirical = empirical_joint(f, noisy, joint_threshold)?;
    let joint_bound = if binary {
        joint_bound_binary(epsilon, fit, tau, t0)?
    } else {
        joint_bound_multiclass(epsilon, fit, tau, t0)?
    };
    records.push(BoundRecord {
        epsilon,
        bound_kind: if binary {
            BoundKind::BinaryJoint
        } else {
            BoundKind::MulticlassJoint
        },
        bound_value: joint_bound.value,
        empirical_value: joint_empirical,
        valid: joint_bound.valid,
    });

    let delta = match config.correction.mode {
        CorrectionMode::Fixed => config
            .correction
            .delta
            .expect("validated when the config was loaded"),
        CorrectionMode::BinaryOptimal => critical_value_binary(tau)?,
        CorrectionMode::Sensitivity => critical_value_sensitivity(eta, tau, f, noisy)?,
        CorrectionMode::Specificity => critical_value_specificity(eta, tau, f, noisy)?,
    };
    let (corrected, report) = lrt_correct_dataset(noisy, f, delta)?;

    if binary {
        let bound = correction_bound_binary(epsilon, fit, tau, t0)?;
        records.push(BoundRecord {
            epsilon,
            bound_kind: BoundKind::BinaryCorrection,
            bound_value: bound.value,
            empirical_value: empirical_correction_error(&corrected)?,
            valid: bound.valid,
        });
        return Ok((records, report.delta_used));
    }

    // Per-side empirical errors: a rejected sample counts against the
    // reject side when the flip missed the Bayes label, an accepted one
    // against the accept side when the kept label differs from it.
    let bayes = noisy.require_bayes_labels()?;
    let mut reject_misses = 0usize;
    let mut accept_misses = 0usize;
    for decision in &report.decisions {
        if decision.new_label != bayes[decision.sample_index] {
            if decision.rejected {
                reject_misses += 1;
            } else {
                accept_misses += 1;
            }
        }
    }
    let n = noisy.len() as f64;
    let residual = empirical_residual(eta, f, noisy)?;
    let sides = [
        (
            Side::Reject,
            BoundKind::ExactReject,
            reject_misses as f64 / n,
        ),
        (
            Side::Accept,
            BoundKind::ExactAccept,
            accept_misses as f64 / n,
        ),
    ];
    for (side, kind, empirical) in sides {
        let bound = correction_bound_exact(epsilon, fit, tau, residual, side, t0)?;
        records.push(BoundRecord {
            epsilon,
            bound_kind: kind,
            bound_value: bound.value,
            empirical_value: empirical,
            valid: bound.valid,
        });
    }
    if let Some(xi) = config.bounds.xi {
        if xi.is_nan() || xi >= report.delta_used {
            return usage(format!(
                "[bounds] xi = {xi} must stay below the applied threshold {}",
                report.delta_used
            ));
        }
        let approx_sides = [
            (
                Side::Reject,
                BoundKind::ApproxReject,
                reject_misses as f64 / n,
            ),
            (
                Side::Accept,
                BoundKind::ApproxAccept,
                accept_misses as f64 / n,
            ),
        ];
        for (side, kind, empirical) in approx_sides {
            let bound = correction_bound_approx(
                epsilon,
                xi,
                report.delta_used,
                fit,
                tau,
                residual,
                side,
                t0,
            )?;
            records.push(BoundRecord {
                epsilon,
                bound_kind: kind,
                bound_value: bound.value,
                empirical_value: empirical,
                valid: bound.valid,
            });
        }
    }
    Ok((records, report.delta_used))
}
