//! Training loops: plain cross-entropy and the adaptive label-correction
//! schedule (burn-in, snapshot, combined loss, periodic correction).

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::lrt::likelihood_ratio;
use crate::model::ConditionalModel;
use crate::rng::RandomSource;
use crate::train::mlp::{loss_and_grad, MlpModel};
use crate::types::ClassLabel;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Hyperparameters of the correction training loop.
///
/// Epochs are 1-based. Cross-entropy alone is used through epoch `burn_in`;
/// the snapshot is taken after epoch `burn_in` and refreshed after epoch
/// `burn_in + snapshot_refresh_offset` (skipped when that exceeds `epochs`);
/// label correction runs at the start of every epoch from
/// `burn_in + correction_start_offset` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaCorrConfig {
    pub burn_in: usize,
    pub epochs: usize,
    /// Likelihood-ratio threshold used by the per-epoch correction pass.
    pub delta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Halve the learning rate after each block of this many epochs.
    pub halve_lr_every: Option<usize>,
    pub correction_start_offset: usize,
    pub snapshot_refresh_offset: usize,
}

impl Default for AdaCorrConfig {
    fn default() -> Self {
        Self {
            burn_in: 25,
            epochs: 120,
            delta: 0.95,
            learning_rate: 0.05,
            batch_size: 64,
            hidden: vec![32, 32],
            seed: 0,
            halve_lr_every: Some(60),
            correction_start_offset: 10,
            snapshot_refresh_offset: 40,
        }
    }
}

impl AdaCorrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 || self.burn_in >= self.epochs {
            return Err(Error::Parameter(format!(
                "burn-in {} must be positive and below the epoch count {}",
                self.burn_in, self.epochs
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Parameter(format!(
                "threshold {} must lie in (0, 1]",
                self.delta
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Parameter(format!(
                "learning rate {} must be finite and positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be positive".into()));
        }
        if self.correction_start_offset == 0 || self.snapshot_refresh_offset == 0 {
            return Err(Error::Parameter("schedule offsets must be positive".into()));
        }
        if self.halve_lr_every == Some(0) {
            return Err(Error::Parameter("halving period must be positive".into()));
        }
        Ok(())
    }

    fn step_for_epoch(&self, epoch: usize) -> f64 {
        match self.halve_lr_every {
            Some(every) => self.learning_rate * 0.5_f64.powi(((epoch - 1) / every) as i32),
            None => self.learning_rate,
        }
    }
}

/// One epoch of the training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Accuracy on the training set against the current (possibly corrected)
    /// labels, measured after the epoch's updates.
    pub train_acc_current: f64,
    /// Accuracy on the held-out set against its clean labels.
    pub test_acc_clean: f64,
    /// Fraction of current training labels equal to the Bayes labels; NaN
    /// when the training set carries no Bayes labels.
    pub frac_labels_bayes: f64,
    /// Labels flipped by this epoch's correction pass.
    pub n_flipped: usize,
    /// Sample-weighted mean batch loss over the epoch.
    pub loss: f64,
}

/// Per-epoch records, one per epoch `1..=T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainingTrace {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for record in &self.records {
            w.serialize(record)?;
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        for row in r.deserialize() {
            records.push(row?);
        }
        Ok(Self { records })
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

enum Mode {
    AdaCorr,
    CrossEntropy,
}

/// Runs the correction schedule on `data`, evaluating on `test` (which must
/// carry clean labels) after every epoch. Returns the trained model, the
/// trace, and a copy of the training set whose noisy labels are the final
/// corrected labels.
pub fn train_adacorr(
    data: &LabeledDataset,
    test: &LabeledDataset,
    config: &AdaCorrConfig,
) -> Result<(MlpModel, TrainingTrace, LabeledDataset)> {
    let (model, trace, labels) = run(data, test, config, Mode::AdaCorr)?;
    let mut corrected = data.clone();
    corrected.set_noisy_labels(labels)?;
    Ok((model, trace, corrected))
}

/// Plain cross-entropy training on the dataset's labels as given, with the
/// same initialization, batching, and schedule as [`train_adacorr`]. Used as
/// the like-for-like baseline.
pub fn train_crossentropy(
    data: &LabeledDataset,
    test: &LabeledDataset,
    config: &AdaCorrConfig,
) -> Result<(MlpModel, TrainingTrace)> {
    let (model, trace, _) = run(data, test, config, Mode::CrossEntropy)?;
    Ok((model, trace))
}

fn run(
    data: &LabeledDataset,
    test: &LabeledDataset,
    config: &AdaCorrConfig,
    mode: Mode,
) -> Result<(MlpModel, TrainingTrace, Vec<ClassLabel>)> {
    config.validate()?;
    let test_clean = test.require_clean_labels()?;
    if test.dim() != data.dim() || test.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "test shape {}x{} does not match training shape {}x{}",
            test.dim(),
            test.n_classes(),
            data.dim(),
            data.n_classes()
        )));
    }
    if data.is_empty() {
        return Err(Error::Parameter("empty training set".into()));
    }
    let n = data.len();
    let mut widths = Vec::with_capacity(config.hidden.len() + 2);
    widths.push(data.dim());
    widths.extend_from_slice(&config.hidden);
    widths.push(data.n_classes());
    let source = RandomSource::new(config.seed);
    let mut model = MlpModel::new_random(&widths, &mut source.stream(0))?;
    let mut shuffle_rng = source.stream(1);
    let mut labels: Vec<ClassLabel> = data.noisy_labels().to_vec();
    let mut snapshot: Option<Vec<Vec<f64>>> = None;
    let mut indices: Vec<usize> = (0..n).collect();
    let correction_from = config.burn_in + config.correction_start_offset;
    let refresh_at = config.burn_in + config.snapshot_refresh_offset;
    let mut trace = TrainingTrace::default();
    for epoch in 1..=config.epochs {
        let step = config.step_for_epoch(epoch);
        let mut n_flipped = 0usize;
        if matches!(mode, Mode::AdaCorr) && epoch >= correction_from {
            for (i, label) in labels.iter_mut().enumerate() {
                let probs = model.predict(data.feature(i));
                if likelihood_ratio(&probs, *label) < config.delta {
                    *label = probs.argmax();
                    n_flipped += 1;
                }
            }
        }
        indices.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in indices.chunks(config.batch_size).enumerate() {
            let active_snapshot = match mode {
                Mode::AdaCorr => snapshot.as_deref(),
                Mode::CrossEntropy => None,
            };
            let (batch_loss, grad) =
                loss_and_grad(&model, data, chunk, &labels, active_snapshot)
                    .map_err(|e| Error::Numerical(format!("epoch {epoch}, batch {b}: {e}")))?;
            model.apply_gradient(&grad, step)?;
            loss_sum += batch_loss * chunk.len() as f64;
        }
        if matches!(mode, Mode::AdaCorr) && (epoch == config.burn_in || epoch == refresh_at) {
            snapshot = Some(
                (0..n)
                    .map(|i| model.predict_probs(data.feature(i)))
                    .collect(),
            );
        }
        let train_hits = (0..n)
            .filter(|&i| model.predict(data.feature(i)).argmax() == labels[i])
            .count();
        let test_hits = (0..test.len())
            .filter(|&i| model.predict(test.feature(i)).argmax() == test_clean[i])
            .count();
        let frac_labels_bayes = match data.bayes_labels() {
            Some(bayes) => {
                labels.iter().zip(bayes).filter(|(a, b)| a == b).count() as f64 / n as f64
            }
            None => f64::NAN,
        };
        trace.records.push(EpochRecord {
            epoch,
            train_acc_current: train_hits as f64 / n as f64,
            test_acc_clean: test_hits as f64 / test.len() as f64,
            frac_labels_bayes,
            n_flipped,
            loss: loss_sum / n as f64,
        });
    }
    Ok((model, trace, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::inject_noise;
    use crate::synth::{bayes_labels, sample_dataset, GaussianMixtureSpec};
    use crate::transition::TransitionMatrix;

    fn small_config() -> AdaCorrConfig {
        AdaCorrConfig {
            burn_in: 3,
            epochs: 10,
            hidden: vec![8],
            seed: 5,
            correction_start_offset: 2,
            snapshot_refresh_offset: 5,
            ..AdaCorrConfig::default()
        }
    }

    fn small_problem(n: usize, seed: u64, rho: f64) -> (LabeledDataset, LabeledDataset) {
        let spec = GaussianMixtureSpec::binary_benchmark();
        let eta = spec.exact_eta();
        let train = sample_dataset(&spec, n, RandomSource::new(seed));
        let train = bayes_labels(&eta, &train).unwrap();
        let train = if rho > 0.0 {
            let tau = TransitionMatrix::binary(rho, rho).unwrap();
            inject_noise(&train, &tau, RandomSource::new(seed + 1)).unwrap()
        } else {
            train
        };
        let test = sample_dataset(&spec, n / 2, RandomSource::new(seed + 2));
        let test = bayes_labels(&eta, &test).unwrap();
        (train, test)
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let (train, test) = small_problem(300, 60, 0.3);
        let config = small_config();
        let (m1, t1, c1) = train_adacorr(&train, &test, &config).unwrap();
        let (m2, t2, c2) = train_adacorr(&train, &test, &config).unwrap();
        assert_eq!(m1.parameters(), m2.parameters());
        assert_eq!(t1, t2);
        assert_eq!(c1.noisy_labels(), c2.noisy_labels());
        let different_seed = AdaCorrConfig { seed: 6, ..config };
        let (m3, _, _) = train_adacorr(&train, &test, &different_seed).unwrap();
        assert_ne!(m1.parameters(), m3.parameters());
    }

    #[test]
    fn near_zero_threshold_never_flips() {
        let (train, test) = small_problem(200, 70, 0.3);
        let config = AdaCorrConfig {
            delta: 1e-9,
            ..small_config()
        };
        let (_, trace, corrected) = train_adacorr(&train, &test, &config).unwrap();
        assert!(trace.records.iter().all(|r| r.n_flipped == 0));
        assert_eq!(corrected.noisy_labels(), train.noisy_labels());
    }

    #[test]
    fn no_flips_before_correction_starts() {
        let (train, test) = small_problem(200, 80, 0.3);
        let config = small_config();
        let first_correction = config.burn_in + config.correction_start_offset;
        let (_, trace, _) = train_adacorr(&train, &test, &config).unwrap();
        assert_eq!(trace.records.len(), config.epochs);
        for r in &trace.records {
            assert_eq!(r.epoch, trace.records[r.epoch - 1].epoch);
            if r.epoch < first_correction {
                assert_eq!(r.n_flipped, 0, "epoch {}", r.epoch);
            }
        }
        assert!(
            trace.records[first_correction - 1..]
                .iter()
                .any(|r| r.n_flipped > 0),
            "correction should flip something on noisy data"
        );
    }

    #[test]
    fn corrected_dataset_keeps_everything_but_labels() {
        let (train, test) = small_problem(150, 90, 0.3);
        let (_, _, corrected) = train_adacorr(&train, &test, &small_config()).unwrap();
        assert_eq!(corrected.len(), train.len());
        assert_eq!(corrected.clean_labels(), train.clean_labels());
        assert_eq!(corrected.bayes_labels(), train.bayes_labels());
        assert_eq!(corrected.feature(3), train.feature(3));
    }

    #[test]
    fn learning_rate_schedule() {
        let config = AdaCorrConfig {
            learning_rate: 0.08,
            halve_lr_every: Some(4),
            ..AdaCorrConfig::default()
        };
        assert_eq!(config.step_for_epoch(1), 0.08);
        assert_eq!(config.step_for_epoch(4), 0.08);
        assert_eq!(config.step_for_epoch(5), 0.04);
        assert_eq!(config.step_for_epoch(9), 0.02);
        let constant = AdaCorrConfig {
            halve_lr_every: None,
            ..config
        };
        assert_eq!(constant.step_for_epoch(100), 0.08);
    }

    #[test]
    fn config_validation() {
        let ok = AdaCorrConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            AdaCorrConfig {
                burn_in: 0,
                ..ok.clone()
            },
            AdaCorrConfig {
                burn_in: 120,
                ..ok.clone()
            },
            AdaCorrConfig {
                delta: 0.0,
                ..ok.clone()
            },
            AdaCorrConfig {
                delta: 1.5,
                ..ok.clone()
            },
            AdaCorrConfig {
                learning_rate: 0.0,
                ..ok.clone()
            },
            AdaCorrConfig {
                batch_size: 0,
                ..ok.clone()
            },
            AdaCorrConfig {
                correction_start_offset: 0,
                ..ok.clone()
            },
            AdaCorrConfig {
                halve_lr_every: Some(0),
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn test_set_requires_clean_labels() {
        let (train, _) = small_problem(100, 95, 0.3);
        let spec = GaussianMixtureSpec::binary_benchmark();
        let unlabeled = sample_dataset(&spec, 50, RandomSource::new(96));
        let stripped = LabeledDataset::new(
            unlabeled.feature(0).to_vec(),
            unlabeled.dim(),
            unlabeled.n_classes(),
            vec![0],
        )
        .unwrap();
        assert!(matches!(
            train_adacorr(&train, &stripped, &small_config()),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn baseline_ignores_snapshot_and_correction() {
        let (train, test) = small_problem(200, 97, 0.3);
        let config = small_config();
        let (_, trace) = train_crossentropy(&train, &test, &config).unwrap();
        assert!(trace.records.iter().all(|r| r.n_flipped == 0));
        assert_eq!(trace.records.len(), config.epochs);
    }

    #[test]
    fn noise_free_labels_leave_correction_nearly_inert() {
        // Start from Bayes-optimal labels: nothing systematic is left for
        // the correction pass to fix, so flips stay rare and the final
        // accuracy tracks plain training.
        let (train, _) = small_problem(1_000, 98, 0.0);
        let mut train = train;
        let bayes = train.bayes_labels().unwrap().to_vec();
        train.set_noisy_labels(bayes).unwrap();
        let spec = GaussianMixtureSpec::binary_benchmark();
        let eta = spec.exact_eta();
        let test = sample_dataset(&spec, 2_000, RandomSource::new(99));
        let test = bayes_labels(&eta, &test).unwrap();
        // Burn-in long enough for the snapshot to come from a converged
        // model, mirroring the benchmark's burn-in-to-epochs ratio.
        let config = AdaCorrConfig {
            burn_in: 14,
            epochs: 40,
            hidden: vec![16],
            seed: 11,
            ..AdaCorrConfig::default()
        };
        let (_, ada, _) = train_adacorr(&train, &test, &config).unwrap();
        let (_, plain) = train_crossentropy(&train, &test, &config).unwrap();
        let ada_acc = ada.records.last().unwrap().test_acc_clean;
        let plain_acc = plain.records.last().unwrap().test_acc_clean;
        assert!(
            (ada_acc - plain_acc).abs() <= 0.015,
            "adacorr {ada_acc} vs plain {plain_acc}"
        );
        // The first correction pass settles the few samples where the model
        // still disagrees with the Bayes labels; afterwards flips are rare.
        let first = config.burn_in + config.correction_start_offset;
        assert!(
            ada.records[first - 1].n_flipped <= train.len() * 3 / 100,
            "{} flips in the settling pass",
            ada.records[first - 1].n_flipped
        );
        for r in &ada.records[first..] {
            assert!(
                r.n_flipped <= train.len() / 100,
                "{} flips at epoch {}",
                r.n_flipped,
                r.epoch
            );
        }
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = TrainingTrace {
            records: vec![
                EpochRecord {
                    epoch: 1,
                    train_acc_current: 0.5,
                    test_acc_clean: 0.625,
                    frac_labels_bayes: f64::NAN,
                    n_flipped: 0,
                    loss: 0.7011,
                },
                EpochRecord {
                    epoch: 2,
                    train_acc_current: 0.75,
                    test_acc_clean: 0.8,
                    frac_labels_bayes: 0.9,
                    n_flipped: 3,
                    loss: 0.42,
                },
            ],
        };
        let bytes = trace.to_csv_bytes().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with(
            "epoch,train_acc_current,test_acc_clean,frac_labels_bayes,n_flipped,loss"
        ));
        let loaded = TrainingTrace::read_csv(bytes.as_slice()).unwrap();
        assert_eq!(loaded.records.len(), 2);
        assert!(loaded.records[0].frac_labels_bayes.is_nan());
        assert_eq!(loaded.records[1], trace.records[1]);
    }
}
