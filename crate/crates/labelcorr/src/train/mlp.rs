//! A small dense network with tanh hidden layers and a softmax output,
//! trained by plain gradient descent. Big enough for the synthetic
//! benchmarks, simple enough to verify gradient-by-gradient.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::ConditionalModel;
use crate::types::{ClassLabel, ProbVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::fs;
use std::path::Path;

/// First bytes of every checkpoint file.
pub const CHECKPOINT_MAGIC: [u8; 8] = *b"LCMLPv1\n";

/// Floor applied to probabilities before taking logs in the loss.
pub const LOG_FLOOR: f64 = 1e-12;

/// Fully connected network: `widths[0]` inputs, tanh hidden layers, and a
/// softmax over `widths.last()` classes. Parameters live in one flat vector,
/// per layer: the `fan_in x fan_out` weight matrix in row-major order, then
/// the biases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    widths: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct LayerSpan {
    weights: usize,
    biases: usize,
    fan_in: usize,
    fan_out: usize,
}

fn validate_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 {
        return Err(Error::Parameter(format!(
            "need an input and an output width, got {} widths",
            widths.len()
        )));
    }
    if widths.contains(&0) {
        return Err(Error::Parameter("layer widths must be positive".into()));
    }
    if *widths.last().unwrap() < 2 {
        return Err(Error::Parameter(
            "output layer needs at least 2 classes".into(),
        ));
    }
    Ok(())
}

fn parameter_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpModel {
    /// Initializes weights from `N(0, 1/fan_in)` and biases at zero,
    /// consuming the generator in a fixed layer-by-layer order.
    pub fn new_random<R: Rng>(widths: &[usize], rng: &mut R) -> Result<Self> {
        validate_widths(widths)?;
        let mut params = Vec::with_capacity(parameter_count(widths));
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = (1.0 / fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                let z: f64 = rng.sample(StandardNormal);
                params.push(z * scale);
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self {
            widths: widths.to_vec(),
            params,
        })
    }

    fn from_parts(widths: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        validate_widths(&widths)?;
        if params.len() != parameter_count(&widths) {
            return Err(Error::Parameter(format!(
                "{} parameters for widths {:?} (expected {})",
                params.len(),
                widths,
                parameter_count(&widths)
            )));
        }
        Ok(Self { widths, params })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn n_parameters(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Parameter(format!(
                "{} parameters, expected {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Subtracts `step * gradient` from every parameter.
    pub fn apply_gradient(&mut self, gradient: &[f64], step: f64) -> Result<()> {
        if gradient.len() != self.params.len() {
            return Err(Error::Parameter(format!(
                "gradient has {} entries, expected {}",
                gradient.len(),
                self.params.len()
            )));
        }
        for (p, g) in self.params.iter_mut().zip(gradient) {
            *p -= step * g;
        }
        Ok(())
    }

    fn spans(&self) -> Vec<LayerSpan> {
        let mut spans = Vec::with_capacity(self.widths.len() - 1);
        let mut offset = 0;
        for w in self.widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            spans.push(LayerSpan {
                weights: offset,
                biases: offset + fan_in * fan_out,
                fan_in,
                fan_out,
            });
            offset += fan_in * fan_out + fan_out;
        }
        spans
    }

    /// Runs the network, returning every hidden activation plus the softmax
    /// output. Hidden activations are needed for backpropagation.
    fn forward_cached(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let spans = self.spans();
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(spans.len() - 1);
        let mut logits = Vec::new();
        for (l, span) in spans.iter().enumerate() {
            let prev: &[f64] = if l == 0 { x } else { &hidden[l - 1] };
            let mut out = vec![0.0; span.fan_out];
            for (o, out_o) in out.iter_mut().enumerate() {
                let mut z = self.params[span.biases + o];
                for (i, &p) in prev.iter().enumerate() {
                    z += p * self.params[span.weights + i * span.fan_out + o];
                }
                *out_o = z;
            }
            if l + 1 < spans.len() {
                for v in &mut out {
                    *v = v.tanh();
                }
                hidden.push(out);
            } else {
                logits = out;
            }
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in &mut logits {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in &mut logits {
            *v /= sum;
        }
        (hidden, logits)
    }

    /// Class probabilities for one input.
    pub fn predict_probs(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).1
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(8 + 8 * (1 + self.widths.len()) + 8 * self.params.len());
        bytes.extend_from_slice(&CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&(self.widths.len() as u64).to_le_bytes());
        for &w in &self.widths {
            bytes.extend_from_slice(&(w as u64).to_le_bytes());
        }
        for &p in &self.params {
            bytes.extend_from_slice(&p.to_le_bytes());
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
            let end = cursor
                .checked_add(n)
                .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
            if end > bytes.len() {
                return Err(Error::Format("checkpoint truncated".into()));
            }
            let slice = &bytes[*cursor..end];
            *cursor = end;
            Ok(slice)
        };
        if take(&mut cursor, 8)? != CHECKPOINT_MAGIC {
            return Err(Error::Format(
                "not a model checkpoint (bad magic bytes)".into(),
            ));
        }
        let n_widths = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
        if !(2..=64).contains(&n_widths) {
            return Err(Error::Format(format!("implausible layer count {n_widths}")));
        }
        let mut widths = Vec::with_capacity(n_widths);
        for _ in 0..n_widths {
            let w = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
            if !(1..=1_000_000).contains(&w) {
                return Err(Error::Format(format!("implausible layer width {w}")));
            }
            widths.push(w);
        }
        let n_params = parameter_count(&widths);
        let mut params = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            let p = f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
            if !p.is_finite() {
                return Err(Error::Format("non-finite parameter in checkpoint".into()));
            }
            params.push(p);
        }
        if cursor != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after checkpoint payload",
                bytes.len() - cursor
            )));
        }
        Self::from_parts(widths, params)
    }

    pub fn save_checkpoint<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

impl ConditionalModel for MlpModel {
    fn n_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn predict(&self, x: &[f64]) -> ProbVector {
        ProbVector::new_unchecked(self.predict_probs(x))
    }
}

/// Mean loss and flat gradient over a batch of sample indices.
///
/// The loss is cross-entropy against the current labels, plus, when
/// `snapshot` probabilities are supplied, a soft-target cross-entropy that
/// pulls the prediction toward the snapshot:
/// `-(1/B) sum_batch [log f_y + sum_c snapshot_c log f_c]`, with log
/// arguments floored at [`LOG_FLOOR`].
pub fn loss_and_grad(
    model: &MlpModel,
    data: &LabeledDataset,
    batch: &[usize],
    labels: &[ClassLabel],
    snapshot: Option<&[Vec<f64>]>,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Parameter("empty batch".into()));
    }
    if labels.len() != data.len() {
        return Err(Error::Parameter(format!(
            "{} labels for {} samples",
            labels.len(),
            data.len()
        )));
    }
    if let Some(s) = snapshot {
        if s.len() != data.len() {
            return Err(Error::Parameter(format!(
                "{} snapshot rows for {} samples",
                s.len(),
                data.len()
            )));
        }
    }
    if model.input_dim() != data.dim() || model.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "model shape {}x{} does not fit dataset shape {}x{}",
            model.input_dim(),
            model.n_classes(),
            data.dim(),
            data.n_classes()
        )));
    }
    let k = model.n_classes();
    let spans = model.spans();
    let mut grad = vec![0.0; model.n_parameters()];
    let mut loss = 0.0;
    for &idx in batch {
        if idx >= data.len() {
            return Err(Error::Parameter(format!("batch index {idx} out of range")));
        }
        let x = data.feature(idx);
        let y = labels[idx];
        if y >= k {
            return Err(Error::Parameter(format!(
                "label {y} out of range for {k} classes"
            )));
        }
        let (hidden, probs) = model.forward_cached(x);
        loss -= probs[y].max(LOG_FLOOR).ln();
        let mut dz: Vec<f64> = probs.clone();
        dz[y] -= 1.0;
        if let Some(s) = snapshot {
            let target = &s[idx];
            for c in 0..k {
                loss -= target[c] * probs[c].max(LOG_FLOOR).ln();
                dz[c] += probs[c] - target[c];
            }
        }
        for (l, span) in spans.iter().enumerate().rev() {
            let prev: &[f64] = if l == 0 { x } else { &hidden[l - 1] };
            for (i, &p) in prev.iter().enumerate() {
                let row = span.weights + i * span.fan_out;
                for (o, &d) in dz.iter().enumerate() {
                    grad[row + o] += p * d;
                }
            }
            for (o, &d) in dz.iter().enumerate() {
                grad[span.biases + o] += d;
            }
            if l > 0 {
                let mut dprev = vec![0.0; span.fan_in];
                for (i, dp) in dprev.iter_mut().enumerate() {
                    let row = span.weights + i * span.fan_out;
                    let mut s = 0.0;
                    for (o, &d) in dz.iter().enumerate() {
                        s += model.params[row + o] * d;
                    }
                    *dp = s * (1.0 - prev[i] * prev[i]);
                }
                dz = dprev;
            }
        }
    }
    let scale = 1.0 / batch.len() as f64;
    loss *= scale;
    for g in &mut grad {
        *g *= scale;
    }
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("non-finite loss {loss}")));
    }
    Ok((loss, grad))
}

/// Which label array accuracy is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTarget {
    Noisy,
    Clean,
    Bayes,
}

/// Fraction of samples whose predicted argmax matches the requested labels.
pub fn evaluate<M: ConditionalModel>(
    model: &M,
    data: &LabeledDataset,
    against: EvalTarget,
) -> Result<f64> {
    let labels = match against {
        EvalTarget::Noisy => data.noisy_labels(),
        EvalTarget::Clean => data.require_clean_labels()?,
        EvalTarget::Bayes => data.require_bayes_labels()?,
    };
    if model.n_classes() != data.n_classes() {
        return Err(Error::Parameter(format!(
            "model has {} classes but dataset has {}",
            model.n_classes(),
            data.n_classes()
        )));
    }
    let hits = (0..data.len())
        .filter(|&i| model.predict(data.feature(i)).argmax() == labels[i])
        .count();
    Ok(hits as f64 / data.len() as f64)
}
