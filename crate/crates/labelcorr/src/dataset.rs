//! Labeled feature datasets and their CSV serialization.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::ClassLabel;

/// Feature vectors with a noisy label per sample, plus optional clean labels
/// (the sampled ground truth) and Bayes labels (the argmax of the true
/// conditional probability).
///
/// Features are stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    d: usize,
    n_classes: usize,
    noisy_labels: Vec<ClassLabel>,
    clean_labels: Option<Vec<ClassLabel>>,
    bayes_labels: Option<Vec<ClassLabel>>,
}

impl LabeledDataset {
    /// Builds a dataset from row-major features and noisy labels.
    pub fn new(
        features: Vec<f64>,
        d: usize,
        n_classes: usize,
        noisy_labels: Vec<ClassLabel>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter(
                "feature dimension must be positive".into(),
            ));
        }
        if n_classes < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        if !features.len().is_multiple_of(d) {
            return Err(Error::Parameter(format!(
                "feature buffer length {} is not a multiple of dimension {d}",
                features.len()
            )));
        }
        let n = features.len() / d;
        if noisy_labels.len() != n {
            return Err(Error::Parameter(format!(
                "{} labels for {n} samples",
                noisy_labels.len()
            )));
        }
        if !features.iter().all(|f| f.is_finite()) {
            return Err(Error::Parameter("non-finite feature value".into()));
        }
        let ds = Self {
            features,
            d,
            n_classes,
            noisy_labels,
            clean_labels: None,
            bayes_labels: None,
        };
        ds.check_labels(&ds.noisy_labels)?;
        Ok(ds)
    }

    fn check_labels(&self, labels: &[ClassLabel]) -> Result<()> {
        if labels.len() != self.len() {
            return Err(Error::Parameter(format!(
                "{} labels for {} samples",
                labels.len(),
                self.len()
            )));
        }
        match labels.iter().find(|&&l| l >= self.n_classes) {
            Some(&l) => Err(Error::Parameter(format!(
                "label {l} outside 0..{}",
                self.n_classes
            ))),
            None => Ok(()),
        }
    }

    /// Attaches clean (sampled ground-truth) labels.
    pub fn with_clean_labels(mut self, labels: Vec<ClassLabel>) -> Result<Self> {
        self.check_labels(&labels)?;
        self.clean_labels = Some(labels);
        Ok(self)
    }

    /// Attaches Bayes-optimal labels.
    pub fn with_bayes_labels(mut self, labels: Vec<ClassLabel>) -> Result<Self> {
        self.check_labels(&labels)?;
        self.bayes_labels = Some(labels);
        Ok(self)
    }

    /// Replaces the noisy labels (used by correction and training).
    pub fn set_noisy_labels(&mut self, labels: Vec<ClassLabel>) -> Result<()> {
        self.check_labels(&labels)?;
        self.noisy_labels = labels;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.noisy_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noisy_labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Feature vector of sample `i`.
    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn noisy_labels(&self) -> &[ClassLabel] {
        &self.noisy_labels
    }

    pub fn clean_labels(&self) -> Option<&[ClassLabel]> {
        self.clean_labels.as_deref()
    }

    pub fn bayes_labels(&self) -> Option<&[ClassLabel]> {
        self.bayes_labels.as_deref()
    }

    /// Clean labels, or a state error naming the missing array.
    pub fn require_clean_labels(&self) -> Result<&[ClassLabel]> {
        self.clean_labels
            .as_deref()
            .ok_or_else(|| Error::State("dataset has no clean labels".into()))
    }

    /// Bayes labels, or a state error naming the missing array.
    pub fn require_bayes_labels(&self) -> Result<&[ClassLabel]> {
        self.bayes_labels
            .as_deref()
            .ok_or_else(|| Error::State("dataset has no bayes labels".into()))
    }

    /// Writes the dataset as CSV with header
    /// `f0..f{d-1}, noisy_label[, clean_label][, bayes_label]`.
    ///
    /// Features are printed with 17 significant digits so that reading the
    /// file back reproduces every value bit for bit.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.d).map(|j| format!("f{j}")).collect();
        header.push("noisy_label".into());
        if self.clean_labels.is_some() {
            header.push("clean_label".into());
        }
        if self.bayes_labels.is_some() {
            header.push("bayes_label".into());
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut record: Vec<String> = self
                .feature(i)
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            record.push(self.noisy_labels[i].to_string());
            if let Some(clean) = &self.clean_labels {
                record.push(clean[i].to_string());
            }
            if let Some(bayes) = &self.bayes_labels {
                record.push(bayes[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the CSV format to a file path.
    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the CSV format. The class count is inferred as one past the
    /// largest label present (at least 2).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let d = cols
            .iter()
            .enumerate()
            .take_while(|(j, c)| **c == format!("f{j}"))
            .count();
        if d == 0 {
            return Err(Error::Format("no feature columns (f0, f1, ...)".into()));
        }
        let rest = &cols[d..];
        let expect = |idx: usize, name: &str| -> Result<bool> {
            match rest.get(idx) {
                Some(&c) if c == name => Ok(true),
                Some(&c) => Err(Error::Format(format!(
                    "expected column '{name}', found '{c}'"
                ))),
                None => Ok(false),
            }
        };
        if !expect(0, "noisy_label")? {
            return Err(Error::Format("missing 'noisy_label' column".into()));
        }
        let mut next = 1;
        let has_clean = match rest.get(next) {
            Some(&"clean_label") => {
                next += 1;
                true
            }
            _ => false,
        };
        let has_bayes = match rest.get(next) {
            Some(&"bayes_label") => {
                next += 1;
                true
            }
            Some(&c) => return Err(Error::Format(format!("unexpected column '{c}'"))),
            None => false,
        };
        if rest.len() > next {
            return Err(Error::Format(format!("unexpected column '{}'", rest[next])));
        }

        let mut features = Vec::new();
        let mut noisy = Vec::new();
        let mut clean = Vec::new();
        let mut bayes = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != cols.len() {
                return Err(Error::Format(format!(
                    "row {line} has {} fields, expected {}",
                    record.len(),
                    cols.len()
                )));
            }
            for j in 0..d {
                let v: f64 = record[j].parse().map_err(|_| {
                    Error::Format(format!("row {line}: bad feature '{}'", &record[j]))
                })?;
                features.push(v);
            }
            let parse_label = |field: &str| -> Result<ClassLabel> {
                field
                    .parse()
                    .map_err(|_| Error::Format(format!("row {line}: bad label '{field}'")))
            };
            let mut col = d;
            noisy.push(parse_label(&record[col])?);
            col += 1;
            if has_clean {
                clean.push(parse_label(&record[col])?);
                col += 1;
            }
            if has_bayes {
                bayes.push(parse_label(&record[col])?);
            }
        }

        let max_label = noisy
            .iter()
            .chain(clean.iter())
            .chain(bayes.iter())
            .copied()
            .max()
            .ok_or_else(|| Error::Format("dataset has no rows".into()))?;
        let n_classes = (max_label + 1).max(2);
        let mut ds = Self::new(features, d, n_classes, noisy)?;
        if has_clean {
            ds = ds.with_clean_labels(clean)?;
        }
        if has_bayes {
            ds = ds.with_bayes_labels(bayes)?;
        }
        Ok(ds)
    }

    /// Reads the CSV format from a file path.
    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledDataset {
        LabeledDataset::new(
            vec![0.25, -1.5, 1.0 / 3.0, 2.0f64.sqrt(), -0.0, 7e-12],
            2,
            2,
            vec![0, 1, 1],
        )
        .unwrap()
        .with_clean_labels(vec![0, 1, 0])
        .unwrap()
        .with_bayes_labels(vec![0, 0, 1])
        .unwrap()
    }

    #[test]
    fn constructor_validates() {
        assert!(LabeledDataset::new(vec![1.0; 6], 4, 2, vec![0]).is_err());
        assert!(LabeledDataset::new(vec![1.0; 6], 2, 2, vec![0, 1]).is_err());
        assert!(LabeledDataset::new(vec![1.0; 4], 2, 2, vec![0, 2]).is_err());
        assert!(LabeledDataset::new(vec![f64::NAN; 4], 2, 2, vec![0, 1]).is_err());
    }

    #[test]
    fn accessors() {
        let ds = sample();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.feature(1), &[1.0 / 3.0, 2.0f64.sqrt()]);
        assert_eq!(ds.noisy_labels(), &[0, 1, 1]);
        assert_eq!(ds.require_clean_labels().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn missing_arrays_are_state_errors() {
        let ds = LabeledDataset::new(vec![1.0, 2.0], 2, 2, vec![1]).unwrap();
        assert!(matches!(
            ds.require_clean_labels(),
            Err(crate::error::Error::State(_))
        ));
        assert!(matches!(
            ds.require_bayes_labels(),
            Err(crate::error::Error::State(_))
        ));
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = LabeledDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        for i in 0..ds.len() {
            for j in 0..ds.dim() {
                assert_eq!(back.feature(i)[j].to_bits(), ds.feature(i)[j].to_bits());
            }
        }
    }

    #[test]
    fn csv_round_trip_without_optional_columns() {
        let ds = LabeledDataset::new(vec![0.5, -2.5], 1, 2, vec![1, 0]).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,noisy_label\n"));
        let back = LabeledDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.clean_labels(), None);
        assert_eq!(back.bayes_labels(), None);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let missing = "f0,f1\n1.0,2.0\n";
        assert!(LabeledDataset::read_csv(missing.as_bytes()).is_err());
        let bad_order = "f0,noisy_label,bayes_label,clean_label\n1.0,0,0,0\n";
        assert!(LabeledDataset::read_csv(bad_order.as_bytes()).is_err());
        let bad_value = "f0,noisy_label\nxyz,0\n";
        assert!(LabeledDataset::read_csv(bad_value.as_bytes()).is_err());
        let empty = "f0,noisy_label\n";
        assert!(LabeledDataset::read_csv(empty.as_bytes()).is_err());
    }
}
