//! `report`: summarize results documents as tables and plot data.
//!
//! Accepts any mix of JSON documents written by the other subcommands and
//! training-trace CSV files, prints a consolidated summary, and optionally
//! emits each curve as a two-column text file ready for any plotting tool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args as ClapArgs;
use labelcorr::bounds::BoundKind;
use labelcorr::train::TrainingTrace;

use crate::io::{
    self, BoundsDocument, CorrectionDocument, FitDocument, Header, NoiseMeta, SynthMeta,
};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Results documents: JSON from the other subcommands or trace CSVs.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    /// Directory for two-column plot-data files, one per curve.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
}

enum InputDoc {
    Fit(FitDocument),
    Bounds(Box<BoundsDocument>),
    Correction(CorrectionDocument),
    Synth(SynthMeta),
    Noise(NoiseMeta),
    Trace(TrainingTrace),
}

fn load(path: &Path) -> anyhow::Result<InputDoc> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let trace = TrainingTrace::load_csv(path)
            .with_context(|| format!("reading trace {}", path.display()))?;
        return Ok(InputDoc::Trace(trace));
    }
    let value: serde_json::Value = io::read_json(path)?;
    let header: Header = serde_json::from_value(value.clone())
        .with_context(|| format!("reading header of {}", path.display()))?;
    header
        .check_version()
        .with_context(|| format!("document {}", path.display()))?;
    let doc = match header.kind.as_str() {
        "fit" => InputDoc::Fit(serde_json::from_value(value)?),
        "bounds" => InputDoc::Bounds(serde_json::from_value(value)?),
        "correction" => InputDoc::Correction(serde_json::from_value(value)?),
        "synth-meta" => InputDoc::Synth(serde_json::from_value(value)?),
        "noise-meta" => InputDoc::Noise(serde_json::from_value(value)?),
        other => anyhow::bail!(
            "kind: \"{other}\" in {} is not a known document",
            path.display()
        ),
    };
    Ok(doc)
}

pub fn run(args: Args) -> anyhow::Result<()> {
    if let Some(dir) = &args.plot_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut out = String::new();
    for path in &args.inputs {
        let doc = load(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into());
        match &doc {
            InputDoc::Fit(d) => section_fit(&mut out, &stem, d),
            InputDoc::Bounds(d) => section_bounds(&mut out, &stem, d),
            InputDoc::Correction(d) => section_correction(&mut out, &stem, d),
            InputDoc::Synth(d) => section_synth(&mut out, &stem, d),
            InputDoc::Noise(d) => section_noise(&mut out, &stem, d),
            InputDoc::Trace(d) => section_trace(&mut out, &stem, d),
        }
        if let Some(dir) = &args.plot_dir {
            write_plots(dir, &stem, &doc)?;
        }
    }
    print!("{out}");
    Ok(())
}

fn section_fit(out: &mut String, stem: &str, doc: &FitDocument) {
    let fit = &doc.fit;
    let _ = writeln!(out, "[{stem}] margin fit");
    let _ = writeln!(out, "  C          {:.4}", fit.c);
    let _ = writeln!(out, "  lambda     {:.4}", fit.lambda);
    let _ = writeln!(out, "  R^2        {:.4}", fit.r_squared);
    let _ = writeln!(out, "  p-value    {:.3e}", fit.p_value);
    let _ = writeln!(
        out,
        "  grid       {} points in [{}, {}], {} used, {} zero, {} beyond ceiling {}",
        doc.n_grid, doc.t_min, doc.t_max, fit.n_used, fit.n_zero, fit.n_beyond_ceiling, doc.ceiling
    );
    out.push('\n');
}

fn section_bounds(out: &mut String, stem: &str, doc: &BoundsDocument) {
    let _ = writeln!(out, "[{stem}] bound evaluation");
    let _ = writeln!(
        out,
        "  fit C = {:.4}, lambda = {:.4}; joint threshold {:.6}",
        doc.fit.c, doc.fit.lambda, doc.joint_threshold
    );
    let _ = writeln!(
        out,
        "  {:<9} {:<18} {:>12} {:>12}  {:<7} {:<9}",
        "epsilon", "kind", "bound", "empirical", "valid", "DOMINATED"
    );
    for r in &doc.records {
        let dominated = if r.empirical_value <= r.bound_value {
            "yes"
        } else {
            "no"
        };
        let _ = writeln!(
            out,
            "  {:<9} {:<18} {:>12.6} {:>12.6}  {:<7} {:<9}",
            r.epsilon,
            kind_name(r.bound_kind),
            r.bound_value,
            r.empirical_value,
            if r.valid { "yes" } else { "no" },
            dominated
        );
    }
    out.push('\n');
}

fn section_correction(out: &mut String, stem: &str, doc: &CorrectionDocument) {
    let _ = writeln!(
        out,
        "[{stem}] correction ({}, mode {})",
        doc.model, doc.delta_mode
    );
    let _ = writeln!(out, "  delta used     {:.6}", doc.delta_used);
    let _ = writeln!(
        out,
        "  flipped        {} of {} ({:.2}%)",
        doc.n_flipped,
        doc.n_samples,
        100.0 * doc.flip_fraction
    );
    match doc.agreement_with_bayes {
        Some(a) => {
            let _ = writeln!(out, "  Bayes match    {a:.4}");
        }
        None => {
            let _ = writeln!(out, "  Bayes match    n/a (no Bayes labels)");
        }
    }
    out.push('\n');
}

fn section_synth(out: &mut String, stem: &str, doc: &SynthMeta) {
    let _ = writeln!(out, "[{stem}] mixture dataset");
    let _ = writeln!(
        out,
        "  {} samples, {} components, dim {}, seed {}",
        doc.n,
        doc.weights.len(),
        doc.means.first().map_or(0, Vec::len),
        doc.seed
    );
    out.push('\n');
}

fn section_noise(out: &mut String, stem: &str, doc: &NoiseMeta) {
    let _ = writeln!(out, "[{stem}] noise injection (seed {})", doc.seed);
    for (i, row) in doc.observed_rates.iter().enumerate() {
        let requested: Vec<String> = doc.tau.row(i).iter().map(|v| format!("{v:.3}")).collect();
        let observed: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        let _ = writeln!(
            out,
            "  row {i}: requested [{}], observed [{}]",
            requested.join(", "),
            observed.join(", ")
        );
    }
    out.push('\n');
}

fn section_trace(out: &mut String, stem: &str, trace: &TrainingTrace) {
    let _ = writeln!(
        out,
        "[{stem}] training trace ({} epochs)",
        trace.records.len()
    );
    if let Some(last) = trace.records.last() {
        let peak = trace
            .records
            .iter()
            .max_by(|a, b| a.test_acc_clean.total_cmp(&b.test_acc_clean))
            .expect("non-empty");
        let flips: usize = trace.records.iter().map(|r| r.n_flipped).sum();
        let _ = writeln!(
            out,
            "  final train accuracy   {:.4}",
            last.train_acc_current
        );
        let _ = writeln!(out, "  final test accuracy    {:.4}", last.test_acc_clean);
        let _ = writeln!(
            out,
            "  peak test accuracy     {:.4} (epoch {})",
            peak.test_acc_clean, peak.epoch
        );
        if last.frac_labels_bayes.is_nan() {
            let _ = writeln!(out, "  labels matching Bayes  n/a");
        } else {
            let _ = writeln!(
                out,
                "  labels matching Bayes  {:.4}",
                last.frac_labels_bayes
            );
        }
        let _ = writeln!(out, "  total label flips      {flips}");
        let _ = writeln!(out, "  final loss             {:.4}", last.loss);
    }
    out.push('\n');
}

fn kind_name(kind: BoundKind) -> &'static str {
    match kind {
        BoundKind::BinaryJoint => "binary_joint",
        BoundKind::MulticlassJoint => "multiclass_joint",
        BoundKind::BinaryCorrection => "binary_correction",
        BoundKind::ExactReject => "exact_reject",
        BoundKind::ExactAccept => "exact_accept",
        BoundKind::ApproxReject => "approx_reject",
        BoundKind::ApproxAccept => "approx_accept",
    }
}

/// Writes one `x y` line per point; plain shortest-round-trip decimals.
fn write_curve<I>(dir: &Path, name: &str, points: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut text = String::new();
    for (x, y) in points {
        let _ = writeln!(text, "{x} {y}");
    }
    io::atomic_write(&dir.join(name), text.as_bytes())
}

fn write_plots(dir: &Path, stem: &str, doc: &InputDoc) -> anyhow::Result<()> {
    match doc {
        InputDoc::Fit(d) => {
            let fit = &d.fit;
            write_curve(
                dir,
                &format!("{stem}.margin_probability.dat"),
                fit.t_grid.iter().copied().zip(fit.p_t.iter().copied()),
            )?;
            write_curve(
                dir,
                &format!("{stem}.margin_fit.dat"),
                fit.t_grid.iter().map(|&t| (t, fit.c * t.powf(fit.lambda))),
            )?;
        }
        InputDoc::Bounds(d) => {
            for kind in [
                BoundKind::BinaryJoint,
                BoundKind::MulticlassJoint,
                BoundKind::BinaryCorrection,
                BoundKind::ExactReject,
                BoundKind::ExactAccept,
                BoundKind::ApproxReject,
                BoundKind::ApproxAccept,
            ] {
                let records: Vec<_> = d.records.iter().filter(|r| r.bound_kind == kind).collect();
                if records.is_empty() {
                    continue;
                }
                write_curve(
                    dir,
                    &format!("{stem}.{}_bound.dat", kind_name(kind)),
                    records.iter().map(|r| (r.epsilon, r.bound_value)),
                )?;
                write_curve(
                    dir,
                    &format!("{stem}.{}_empirical.dat", kind_name(kind)),
                    records.iter().map(|r| (r.epsilon, r.empirical_value)),
                )?;
            }
        }
        InputDoc::Trace(trace) => {
            write_curve(
                dir,
                &format!("{stem}.test_accuracy.dat"),
                trace
                    .records
                    .iter()
                    .map(|r| (r.epoch as f64, r.test_acc_clean)),
            )?;
            write_curve(
                dir,
                &format!("{stem}.train_accuracy.dat"),
                trace
                    .records
                    .iter()
                    .map(|r| (r.epoch as f64, r.train_acc_current)),
            )?;
            write_curve(
                dir,
                &format!("{stem}.labels_bayes.dat"),
                trace
                    .records
                    .iter()
                    .map(|r| (r.epoch as f64, r.frac_labels_bayes)),
            )?;
        }
        InputDoc::Correction(_) | InputDoc::Synth(_) | InputDoc::Noise(_) => {}
    }
    Ok(())
}
