//! `lrt-correct`: flip labels whose likelihood ratio falls below a threshold.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use labelcorr::lrt::{
    critical_value_binary, critical_value_sensitivity, critical_value_specificity,
    lrt_correct_dataset,
};
use labelcorr::synth::GaussianMixtureSpec;
use labelcorr::{LabeledDataset, TransitionMatrix};

use crate::config::CorrectionMode;
use crate::io::{self, usage, CorrectionDocument, Header, NoiseMeta, SynthMeta};
use crate::model::{load_synth_meta, AnyModel, ModelSpec};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Dataset CSV whose noisy labels are to be corrected.
    #[arg(long)]
    pub data: PathBuf,

    /// Classifier: oracle-noisy, oracle-clean, or checkpoint:<path>.
    #[arg(long, value_parser = ModelSpec::parse)]
    pub model: ModelSpec,

    /// Mixture sidecar from synth-gen; required by oracle models and by
    /// the sensitivity/specificity threshold modes.
    #[arg(long)]
    pub synth_meta: Option<PathBuf>,

    /// Noise sidecar from inject-noise; required by oracle-noisy and by
    /// every threshold mode except fixed.
    #[arg(long)]
    pub noise_meta: Option<PathBuf>,

    /// Fixed rejection threshold.
    #[arg(long, conflicts_with = "delta_mode")]
    pub delta: Option<f64>,

    /// Compute the threshold instead: sensitivity, specificity, or
    /// binary-optimal.
    #[arg(long, value_parser = parse_mode)]
    pub delta_mode: Option<CorrectionMode>,

    /// Output dataset CSV with corrected labels.
    #[arg(long)]
    pub out: PathBuf,

    /// Optional JSON report of the correction pass.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_mode(text: &str) -> Result<CorrectionMode, String> {
    match text {
        "sensitivity" => Ok(CorrectionMode::Sensitivity),
        "specificity" => Ok(CorrectionMode::Specificity),
        "binary-optimal" => Ok(CorrectionMode::BinaryOptimal),
        other => Err(format!(
            "unknown mode \"{other}\"; expected sensitivity, specificity, or binary-optimal \
             (for a fixed threshold pass --delta)"
        )),
    }
}

/// Resolves the rejection threshold for a (mode, classifier) combination.
/// The oracle `eta` and matrix come from the sidecars; only `fixed` works
/// without them.
pub fn resolve_delta(
    mode: CorrectionMode,
    fixed: Option<f64>,
    synth_meta: Option<&SynthMeta>,
    tau: Option<&TransitionMatrix>,
    f: &AnyModel,
    data: &LabeledDataset,
) -> anyhow::Result<f64> {
    let need_tau = || -> anyhow::Result<&TransitionMatrix> {
        match tau {
            Some(t) => Ok(t),
            None => usage(format!(
                "threshold mode {} requires --noise-meta",
                mode.as_str()
            )),
        }
    };
    let need_eta = || -> anyhow::Result<labelcorr::synth::ExactEta> {
        match synth_meta {
            Some(m) => {
                let spec = GaussianMixtureSpec::new(m.means.clone(), m.weights.clone())?;
                Ok(spec.exact_eta())
            }
            None => usage(format!(
                "threshold mode {} requires --synth-meta",
                mode.as_str()
            )),
        }
    };
    match mode {
        CorrectionMode::Fixed => match fixed {
            Some(delta) => Ok(delta),
            None => usage("fixed threshold mode requires a delta value"),
        },
        CorrectionMode::BinaryOptimal => Ok(critical_value_binary(need_tau()?)?),
        CorrectionMode::Sensitivity => Ok(critical_value_sensitivity(
            &need_eta()?,
            need_tau()?,
            f,
            data,
        )?),
        CorrectionMode::Specificity => Ok(critical_value_specificity(
            &need_eta()?,
            need_tau()?,
            f,
            data,
        )?),
    }
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let data = io::read_dataset(&args.data)?;
    let synth_meta = load_synth_meta(args.synth_meta.as_deref())?;
    let noise_meta: Option<NoiseMeta> = args
        .noise_meta
        .as_deref()
        .map(|p| io::read_checked(p, "noise-meta"))
        .transpose()?;
    let tau = noise_meta.map(|m| m.tau);

    let f = args.model.build(synth_meta.as_ref(), tau.as_ref())?;
    let mode = match (args.delta, args.delta_mode) {
        (Some(_), None) => CorrectionMode::Fixed,
        (None, Some(mode)) => mode,
        (None, None) => return usage("pass either --delta or --delta-mode"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let delta = resolve_delta(
        mode,
        args.delta,
        synth_meta.as_ref(),
        tau.as_ref(),
        &f,
        &data,
    )?;

    let (corrected, report) = lrt_correct_dataset(&data, &f, delta)?;
    io::write_dataset(&args.out, &corrected)?;

    let doc = CorrectionDocument {
        header: Header::new("correction"),
        model: args.model.kind().into(),
        delta_mode: mode.as_str().into(),
        delta_used: report.delta_used,
        n_samples: data.len(),
        n_flipped: report.n_flipped,
        flip_fraction: report.n_flipped as f64 / data.len() as f64,
        agreement_with_bayes: report.agreement_with_bayes,
    };
    if let Some(path) = &args.report {
        io::write_json(path, &doc)?;
    }
    match doc.agreement_with_bayes {
        Some(a) => println!(
            "flipped {} of {} labels at delta = {:.6}; agreement with Bayes {:.4}; wrote {}",
            doc.n_flipped,
            doc.n_samples,
            doc.delta_used,
            a,
            args.out.display()
        ),
        None => println!(
            "flipped {} of {} labels at delta = {:.6}; wrote {}",
            doc.n_flipped,
            doc.n_samples,
            doc.delta_used,
            args.out.display()
        ),
    }
    Ok(())
}
