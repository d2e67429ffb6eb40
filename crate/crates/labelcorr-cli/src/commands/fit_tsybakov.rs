//! `fit-tsybakov`: fit the margin-condition constants on a dataset.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use labelcorr::bounds::{default_ceiling, fit_tsybakov_with_ceiling};
use labelcorr::synth::GaussianMixtureSpec;

use crate::io::{self, FitDocument, Header};
use crate::model::load_synth_meta;

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Dataset CSV whose features the margins are evaluated on.
    #[arg(long)]
    pub data: PathBuf,

    /// Mixture sidecar from synth-gen; provides the exact conditional
    /// probabilities.
    #[arg(long)]
    pub synth_meta: PathBuf,

    /// Smallest margin level of the grid.
    #[arg(long, default_value_t = 0.01)]
    pub t_min: f64,

    /// Largest margin level of the grid.
    #[arg(long, default_value_t = 0.9)]
    pub t_max: f64,

    /// Number of grid points.
    #[arg(long, default_value_t = 30)]
    pub grid: usize,

    /// Margin ceiling for the regression; defaults by class count.
    #[arg(long)]
    pub ceiling: Option<f64>,

    /// Output JSON document.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let data = io::read_dataset(&args.data)?;
    let meta = load_synth_meta(Some(&args.synth_meta))?.expect("path given");
    let spec = GaussianMixtureSpec::new(meta.means, meta.weights)?;
    let eta = spec.exact_eta();
    let ceiling = args
        .ceiling
        .unwrap_or_else(|| default_ceiling(data.n_classes()));
    let fit = fit_tsybakov_with_ceiling(&eta, &data, args.t_min, args.t_max, args.grid, ceiling)?;

    let doc = FitDocument {
        header: Header::new("fit"),
        t_min: args.t_min,
        t_max: args.t_max,
        n_grid: args.grid,
        ceiling,
        fit,
    };
    io::write_json(&args.out, &doc)?;
    println!(
        "C = {:.4}, lambda = {:.4}, R^2 = {:.4}, p = {:.3e} ({} of {} grid points); wrote {}",
        doc.fit.c,
        doc.fit.lambda,
        doc.fit.r_squared,
        doc.fit.p_value,
        doc.fit.n_used,
        doc.fit.t_grid.len(),
        args.out.display()
    );
    Ok(())
}
