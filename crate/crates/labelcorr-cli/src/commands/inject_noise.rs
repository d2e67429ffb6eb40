//! `inject-noise`: corrupt clean labels through a transition matrix.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use labelcorr::noise::{inject_noise, noise_summary};
use labelcorr::{RandomSource, TransitionMatrix};

use crate::io::{self, usage, Header, NoiseMeta};

#[derive(Debug, ClapArgs)]
#[command(group = clap::ArgGroup::new("pattern")
    .required(true)
    .args(["uniform", "pair", "binary", "tau_file"]))]
pub struct Args {
    /// Input dataset CSV with clean labels.
    #[arg(long)]
    pub data: PathBuf,

    /// Uniform flipping at this total rate.
    #[arg(long, value_name = "RHO")]
    pub uniform: Option<f64>,

    /// Pair flipping to the next class at this rate.
    #[arg(long, value_name = "RHO")]
    pub pair: Option<f64>,

    /// Binary rates as "tau10,tau01".
    #[arg(long, value_name = "T10,T01", value_parser = parse_pair)]
    pub binary: Option<(f64, f64)>,

    /// JSON file holding an explicit transition matrix.
    #[arg(long, value_name = "PATH")]
    pub tau_file: Option<PathBuf>,

    /// Seed for the per-sample flip draws.
    #[arg(long)]
    pub seed: u64,

    /// Output dataset CSV with corrupted labels.
    #[arg(long)]
    pub out: PathBuf,

    /// Sidecar JSON recording the matrix and seed; defaults to the output
    /// path with a .meta.json extension.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"tau10,tau01\", got \"{text}\""));
    }
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s}: {e}"));
    Ok((parse(parts[0])?, parse(parts[1])?))
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let data = io::read_dataset(&args.data)?;
    let k = data.n_classes();
    let tau = if let Some(rho) = args.uniform {
        TransitionMatrix::uniform_flip(k, rho)?
    } else if let Some(rho) = args.pair {
        TransitionMatrix::pair_flip(k, rho)?
    } else if let Some((t10, t01)) = args.binary {
        if k != 2 {
            return usage(format!("--binary applies to 2 classes, dataset has {k}"));
        }
        TransitionMatrix::binary(t10, t01)?
    } else if let Some(path) = &args.tau_file {
        let tau: TransitionMatrix = io::read_json(path)?;
        if tau.n_classes() != k {
            return usage(format!(
                "matrix in {} has {} classes, dataset has {k}",
                path.display(),
                tau.n_classes()
            ));
        }
        tau
    } else {
        unreachable!("clap enforces exactly one noise pattern");
    };

    let noisy = inject_noise(&data, &tau, RandomSource::new(args.seed))?;
    io::write_dataset(&args.out, &noisy)?;

    let meta_path = args
        .meta
        .unwrap_or_else(|| args.out.with_extension("meta.json"));
    let meta = NoiseMeta {
        header: Header::new("noise-meta"),
        tau: tau.clone(),
        seed: args.seed,
        observed_rates: noise_summary(&noisy)?.row_normalized(),
    };
    io::write_json(&meta_path, &meta)?;

    let changed = noisy
        .noisy_labels()
        .iter()
        .zip(noisy.clean_labels().expect("input had clean labels"))
        .filter(|(a, b)| a != b)
        .count();
    println!(
        "flipped {changed} of {} labels; wrote {} and sidecar {}",
        noisy.len(),
        args.out.display(),
        meta_path.display()
    );
    Ok(())
}
