//! Row-stochastic transition matrices describing class-conditional label noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ClassLabel;

/// How a transition matrix was constructed; recorded in serialized form so an
/// experiment file documents its own noise pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Uniform,
    Pair,
    Custom,
}

/// Row-stochastic matrix `tau[i][j] = Pr(noisy = j | clean = i)`.
///
/// Rows sum to 1; for two classes the off-diagonal sum must stay below 1,
/// otherwise the induced map on conditional probabilities degenerates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixData", into = "MatrixData")]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
    kind: MatrixKind,
    rho: Option<f64>,
}

/// Serialized layout: `n_classes`, `rows`, `kind`, `rho`.
#[derive(Serialize, Deserialize)]
struct MatrixData {
    n_classes: usize,
    rows: Vec<Vec<f64>>,
    kind: MatrixKind,
    rho: Option<f64>,
}

impl TryFrom<MatrixData> for TransitionMatrix {
    type Error = Error;

    fn try_from(d: MatrixData) -> Result<Self> {
        if d.rows.len() != d.n_classes {
            return Err(Error::Format(format!(
                "transition matrix declares {} classes but has {} rows",
                d.n_classes,
                d.rows.len()
            )));
        }
        let mut m = TransitionMatrix::from_rows(d.rows)?;
        m.kind = d.kind;
        m.rho = d.rho;
        Ok(m)
    }
}

impl From<TransitionMatrix> for MatrixData {
    fn from(m: TransitionMatrix) -> Self {
        MatrixData {
            n_classes: m.n_classes(),
            rows: m.rows,
            kind: m.kind,
            rho: m.rho,
        }
    }
}

impl TransitionMatrix {
    /// Row-sum tolerance for matrices supplied from outside.
    pub const INPUT_TOLERANCE: f64 = 1e-9;

    /// Builds a custom matrix, validating shape, entry range, row sums, and
    /// (for two classes) that the off-diagonal entries sum below 1.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Parameter(format!(
                "transition matrix needs at least 2 classes, got {n}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parameter(format!(
                    "transition matrix row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (j, &e) in row.iter().enumerate() {
                if !e.is_finite() || !(0.0..=1.0).contains(&e) {
                    return Err(Error::Parameter(format!(
                        "transition entry ({i}, {j}) = {e} outside [0, 1]"
                    )));
                }
                sum += e;
            }
            if (sum - 1.0).abs() > Self::INPUT_TOLERANCE {
                return Err(Error::Parameter(format!(
                    "transition matrix row {i} sums to {sum}, expected 1"
                )));
            }
        }
        if n == 2 && rows[0][1] + rows[1][0] >= 1.0 {
            return Err(Error::Parameter(format!(
                "binary flip rates {} + {} must sum below 1",
                rows[0][1], rows[1][0]
            )));
        }
        Ok(Self {
            rows,
            kind: MatrixKind::Custom,
            rho: None,
        })
    }

    /// Identity matrix: zero noise.
    pub fn identity(n_classes: usize) -> Self {
        let rows = (0..n_classes)
            .map(|i| {
                let mut row = vec![0.0; n_classes];
                row[i] = 1.0;
                row
            })
            .collect();
        Self {
            rows,
            kind: MatrixKind::Custom,
            rho: Some(0.0),
        }
    }

    /// Uniform flipping: with probability `rho` a label moves to one of the
    /// other classes, all equally likely. Requires `rho < (n-1)/n` so the
    /// diagonal stays dominant.
    pub fn uniform_flip(n_classes: usize, rho: f64) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Parameter(format!(
                "uniform flip needs at least 2 classes, got {n_classes}"
            )));
        }
        let limit = (n_classes - 1) as f64 / n_classes as f64;
        if !rho.is_finite() || !(0.0..limit).contains(&rho) {
            return Err(Error::Parameter(format!(
                "uniform flip rate {rho} outside [0, {limit})"
            )));
        }
        let off = rho / (n_classes - 1) as f64;
        let rows = (0..n_classes)
            .map(|i| {
                (0..n_classes)
                    .map(|j| if i == j { 1.0 - rho } else { off })
                    .collect()
            })
            .collect();
        Ok(Self {
            rows,
            kind: MatrixKind::Uniform,
            rho: Some(rho),
        })
    }

    /// Pair flipping: with probability `rho` class `i` moves to its cyclic
    /// successor `(i + 1) mod n`. Requires `rho < 0.5` so the diagonal stays
    /// dominant.
    pub fn pair_flip(n_classes: usize, rho: f64) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Parameter(format!(
                "pair flip needs at least 2 classes, got {n_classes}"
            )));
        }
        if !rho.is_finite() || !(0.0..0.5).contains(&rho) {
            return Err(Error::Parameter(format!(
                "pair flip rate {rho} outside [0, 0.5)"
            )));
        }
        let rows = (0..n_classes)
            .map(|i| {
                let mut row = vec![0.0; n_classes];
                row[i] = 1.0 - rho;
                row[(i + 1) % n_classes] = rho;
                row
            })
            .collect();
        Ok(Self {
            rows,
            kind: MatrixKind::Pair,
            rho: Some(rho),
        })
    }

    /// Binary matrix from the two flip rates: `tau10 = Pr(0 | clean 1)`,
    /// `tau01 = Pr(1 | clean 0)`.
    pub fn binary(tau10: f64, tau01: f64) -> Result<Self> {
        let mut m = Self::from_rows(vec![vec![1.0 - tau01, tau01], vec![tau10, 1.0 - tau10]])?;
        if tau10 == tau01 {
            m.kind = MatrixKind::Uniform;
            m.rho = Some(tau10);
        }
        Ok(m)
    }

    pub fn n_classes(&self) -> usize {
        self.rows.len()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    /// `Pr(noisy = j | clean = i)`.
    pub fn get(&self, i: ClassLabel, j: ClassLabel) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: ClassLabel) -> &[f64] {
        &self.rows[i]
    }

    /// Smallest diagonal entry; the worst-case retention probability used by
    /// the multiclass bounds.
    pub fn min_diagonal(&self) -> f64 {
        (0..self.n_classes())
            .map(|i| self.rows[i][i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether every diagonal entry strictly exceeds every other entry in its
    /// row. The correction guarantees assume this; callers should report (not
    /// silently accept) violations.
    pub fn is_diagonally_dominant(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &e)| i == j || row[i] > e))
    }

    /// Flip rates `(tau10, tau01)` of a binary matrix.
    pub fn binary_rates(&self) -> Result<(f64, f64)> {
        if self.n_classes() != 2 {
            return Err(Error::Parameter(format!(
                "binary rates requested from a {}-class matrix",
                self.n_classes()
            )));
        }
        Ok((self.rows[1][0], self.rows[0][1]))
    }

    /// Pushes a clean conditional probability through the noise process:
    /// `out[i] = sum_j tau[j][i] * eta[j]`.
    pub fn transpose_apply(&self, eta: &[f64]) -> Vec<f64> {
        let n = self.n_classes();
        let mut out = vec![0.0; n];
        for (j, &e) in eta.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.rows[j][i] * e;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_flip_zero_noise_is_identity() {
        let m = TransitionMatrix::uniform_flip(2, 0.0).unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0]);
        assert_eq!(m.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn uniform_flip_ten_classes() {
        let m = TransitionMatrix::uniform_flip(10, 0.4).unwrap();
        assert_abs_diff_eq!(m.get(3, 3), 0.6);
        assert_abs_diff_eq!(m.get(3, 7), 0.4 / 9.0);
        for i in 0..10 {
            assert_abs_diff_eq!(m.row(i).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_flip_three_classes_rows() {
        let m = TransitionMatrix::uniform_flip(3, 0.3).unwrap();
        assert_abs_diff_eq!(m.get(0, 0), 0.7);
        assert_abs_diff_eq!(m.get(0, 1), 0.15);
        assert_abs_diff_eq!(m.get(0, 2), 0.15);
    }

    #[test]
    fn uniform_flip_rejects_rho_at_limit() {
        assert!(TransitionMatrix::uniform_flip(2, 0.5).is_err());
        assert!(TransitionMatrix::uniform_flip(10, 0.9).is_err());
        assert!(TransitionMatrix::uniform_flip(1, 0.1).is_err());
    }

    #[test]
    fn pair_flip_cycles() {
        let m = TransitionMatrix::pair_flip(4, 0.2).unwrap();
        assert_abs_diff_eq!(m.get(0, 0), 0.8);
        assert_abs_diff_eq!(m.get(0, 1), 0.2);
        assert_abs_diff_eq!(m.get(3, 0), 0.2);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn pair_flip_binary_is_symmetric_flip() {
        let m = TransitionMatrix::pair_flip(2, 0.3).unwrap();
        assert_eq!(m.row(0), &[0.7, 0.3]);
        assert_eq!(m.row(1), &[0.3, 0.7]);
    }

    #[test]
    fn pair_flip_zero_noise_is_identity() {
        let m = TransitionMatrix::pair_flip(5, 0.0).unwrap();
        for i in 0..5 {
            assert_eq!(m.get(i, i), 1.0);
        }
    }

    #[test]
    fn pair_flip_rejects_half() {
        assert!(TransitionMatrix::pair_flip(4, 0.5).is_err());
    }

    #[test]
    fn binary_validity_enforced() {
        assert!(TransitionMatrix::binary(0.6, 0.5).is_err());
        assert!(TransitionMatrix::binary(0.3, 0.0).is_ok());
        assert!(TransitionMatrix::from_rows(vec![vec![0.4, 0.6], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn from_rows_validates() {
        assert!(TransitionMatrix::from_rows(vec![vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![1.5, -0.5], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn diagonal_queries() {
        let m = TransitionMatrix::binary(0.2, 0.3).unwrap();
        assert_abs_diff_eq!(m.min_diagonal(), 0.7);
        assert!(m.is_diagonally_dominant());
        let swap_heavy = TransitionMatrix::from_rows(vec![
            vec![0.4, 0.3, 0.3],
            vec![0.1, 0.8, 0.1],
            vec![0.2, 0.2, 0.6],
        ])
        .unwrap();
        assert!(swap_heavy.is_diagonally_dominant());
    }

    #[test]
    fn transpose_apply_matches_hand_computation() {
        let m = TransitionMatrix::binary(0.1, 0.3).unwrap();
        let out = m.transpose_apply(&[0.5, 0.5]);
        assert_abs_diff_eq!(out[1], 0.6 * 0.5 + 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0] + out[1], 1.0, epsilon = 1e-15);

        let u = TransitionMatrix::uniform_flip(3, 0.3).unwrap();
        let eta = [0.7, 0.2, 0.1];
        let got = u.transpose_apply(&eta);
        for (i, &g) in got.iter().enumerate() {
            let want: f64 = (0..3).map(|j| u.get(j, i) * eta[j]).sum();
            assert_abs_diff_eq!(g, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn serialization_round_trip() {
        let m = TransitionMatrix::uniform_flip(3, 0.3).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"n_classes\":3"));
        assert!(text.contains("\"kind\":\"uniform\""));
        let back: TransitionMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn deserialization_rejects_bad_rows() {
        let text = r#"{"n_classes":2,"rows":[[0.5,0.5]],"kind":"custom","rho":null}"#;
        assert!(serde_json::from_str::<TransitionMatrix>(text).is_err());
    }
}
