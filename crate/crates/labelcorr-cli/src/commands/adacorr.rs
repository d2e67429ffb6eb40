//! `adacorr`: train a small network with adaptive label correction.
//!
//! Hyperparameters resolve in three layers: library defaults, then the
//! `[train]` section of an optional experiment config, then command-line
//! flags. The seed has no default; it must arrive through a flag or the
//! config.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use labelcorr::train::{train_adacorr, train_crossentropy, AdaCorrConfig};

use crate::config::ExperimentConfig;
use crate::io::{self, usage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Correct labels during training.
    Adacorr,
    /// Plain cross-entropy baseline with the identical schedule.
    CrossEntropy,
}

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Training dataset CSV (noisy labels, Bayes labels if available).
    #[arg(long)]
    pub train: PathBuf,

    /// Held-out dataset CSV with clean labels.
    #[arg(long)]
    pub test: PathBuf,

    /// Experiment config whose [train] section supplies defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Total training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Epochs trained on the incoming labels before any correction.
    #[arg(long)]
    pub burn_in: Option<usize>,

    /// Likelihood-ratio rejection threshold of the correction pass.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Initial SGD learning rate.
    #[arg(long)]
    pub learning_rate: Option<f64>,

    /// Mini-batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,

    /// Hidden layer widths, comma-separated as in "32,32".
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,

    /// Halve the learning rate every this many epochs; 0 disables.
    #[arg(long)]
    pub halve_lr_every: Option<usize>,

    /// Seed for initialization and batch shuffling.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Training mode.
    #[arg(long, value_enum, default_value_t = Mode::Adacorr)]
    pub mode: Mode,

    /// Output CSV with one record per epoch.
    #[arg(long)]
    pub trace: PathBuf,

    /// Output CSV with the post-training corrected labels.
    #[arg(long)]
    pub corrected: Option<PathBuf>,

    /// Output checkpoint with the trained parameters.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

/// Applies config-section then flag overrides on top of the defaults.
fn resolve(args: &Args) -> anyhow::Result<AdaCorrConfig> {
    let mut config = AdaCorrConfig::default();
    let mut seed = None;

    if let Some(path) = &args.config {
        let experiment = ExperimentConfig::load(path)?;
        let section = match experiment.train {
            Some(section) => section,
            None => return usage(format!("{} has no [train] section", path.display())),
        };
        seed = Some(section.seed);
        if let Some(v) = section.burn_in {
            config.burn_in = v;
        }
        if let Some(v) = section.epochs {
            config.epochs = v;
        }
        if let Some(v) = section.delta {
            config.delta = v;
        }
        if let Some(v) = section.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = section.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = section.hidden {
            config.hidden = v;
        }
        if let Some(v) = section.halve_lr_every {
            config.halve_lr_every = if v == 0 { None } else { Some(v) };
        }
    }

    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = args.burn_in {
        config.burn_in = v;
    }
    if let Some(v) = args.delta {
        config.delta = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = &args.hidden {
        config.hidden = v.clone();
    }
    if let Some(v) = args.halve_lr_every {
        config.halve_lr_every = if v == 0 { None } else { Some(v) };
    }
    match args.seed.or(seed) {
        Some(v) => config.seed = v,
        None => return usage("no seed given; pass --seed or a config with train.seed"),
    }
    Ok(config)
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let config = resolve(&args)?;
    let train_data = io::read_dataset(&args.train)?;
    let test_data = io::read_dataset(&args.test)?;

    let (model, trace, corrected) = match args.mode {
        Mode::Adacorr => {
            let (model, trace, corrected) = train_adacorr(&train_data, &test_data, &config)?;
            (model, trace, Some(corrected))
        }
        Mode::CrossEntropy => {
            let (model, trace) = train_crossentropy(&train_data, &test_data, &config)?;
            (model, trace, None)
        }
    };

    io::atomic_write(&args.trace, &trace.to_csv_bytes()?)?;
    if let Some(path) = &args.corrected {
        match &corrected {
            Some(data) => io::write_dataset(path, data)?,
            None => return usage("--corrected applies only to the adacorr mode"),
        }
    }
    if let Some(path) = &args.checkpoint {
        io::atomic_write(path, &model.to_bytes())?;
    }

    let last = trace
        .records
        .last()
        .expect("training ran at least one epoch");
    println!(
        "{} epochs done; final test accuracy {:.4}, train accuracy {:.4}, loss {:.4}; wrote {}",
        last.epoch,
        last.test_acc_clean,
        last.train_acc_current,
        last.loss,
        args.trace.display()
    );
    Ok(())
}
