//! `synth-gen`: draw a mixture dataset with exact ground truth.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use labelcorr::synth::{bayes_labels, sample_dataset, GaussianMixtureSpec};
use labelcorr::RandomSource;

use crate::io::{self, usage, Header, SynthMeta};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Use the fixed 10-dimensional two-component benchmark mixture.
    #[arg(long, conflicts_with_all = ["classes", "dim", "spread"])]
    pub benchmark: bool,

    /// Number of mixture components (classes) for a custom mixture.
    #[arg(long, requires = "dim", requires = "spread")]
    pub classes: Option<usize>,

    /// Feature dimension for a custom mixture.
    #[arg(long, requires = "classes")]
    pub dim: Option<usize>,

    /// Distance scale between component means for a custom mixture.
    #[arg(long, requires = "classes")]
    pub spread: Option<f64>,

    /// Number of samples to draw.
    #[arg(long)]
    pub n: usize,

    /// Seed for the sample draws.
    #[arg(long)]
    pub seed: u64,

    /// Output dataset CSV.
    #[arg(long)]
    pub out: PathBuf,

    /// Sidecar JSON describing the mixture; defaults to the output path
    /// with a .meta.json extension.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let spec = if args.benchmark {
        GaussianMixtureSpec::binary_benchmark()
    } else {
        match (args.classes, args.dim, args.spread) {
            (Some(c), Some(d), Some(s)) => GaussianMixtureSpec::multiclass(c, d, s)?,
            _ => return usage("pass either --benchmark or --classes/--dim/--spread"),
        }
    };
    let eta = spec.exact_eta();
    let data = sample_dataset(&spec, args.n, RandomSource::new(args.seed));
    let data = bayes_labels(&eta, &data)?;
    io::write_dataset(&args.out, &data)?;

    let meta_path = args
        .meta
        .unwrap_or_else(|| args.out.with_extension("meta.json"));
    let meta = SynthMeta {
        header: Header::new("synth-meta"),
        means: spec.means().to_vec(),
        weights: spec.weights().to_vec(),
        n: args.n,
        seed: args.seed,
    };
    io::write_json(&meta_path, &meta)?;
    println!(
        "wrote {} samples ({} classes, dim {}) to {} and sidecar {}",
        data.len(),
        data.n_classes(),
        data.dim(),
        args.out.display(),
        meta_path.display()
    );
    Ok(())
}
