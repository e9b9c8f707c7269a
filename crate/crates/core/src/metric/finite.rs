use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite space described by its full distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FiniteMetric {
    matrix: Vec<Vec<f64>>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl FiniteMetric {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!(
                    "distance matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "distance ({i}, {j}) = {v} is not a finite nonnegative real"
                    )));
                }
                if v > 1.0 + SYMMETRY_TOL {
                    return Err(Error::InvalidMetric(format!(
                        "distance ({i}, {j}) = {v} exceeds the unit diameter"
                    )));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidMetric(format!(
                    "diagonal entry ({i}, {i}) must be 0"
                )));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if (matrix[i][j] - matrix[j][i]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidMetric(format!(
                        "distance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    /// `n` points with every pairwise distance equal to `d`.
    pub fn uniform(n: usize, d: f64) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { d }).collect())
                .collect(),
        )
    }

    /// Points `0..n` on a line with `L(i, j) = spacing * |i - j|`.
    pub fn line(n: usize, spacing: f64) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| spacing * (i as f64 - j as f64).abs())
                        .collect()
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.matrix.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Largest triangle-inequality violation `L(i,k) - L(i,j) - L(j,k)`.
    pub fn max_triangle_violation(&self) -> f64 {
        let n = self.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max(self.matrix[i][k] - self.matrix[i][j] - self.matrix[j][k]);
                }
            }
        }
        worst
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }
}

impl TryFrom<Vec<Vec<f64>>> for FiniteMetric {
    type Error = Error;

    fn try_from(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(matrix)
    }
}

impl From<FiniteMetric> for Vec<Vec<f64>> {
    fn from(m: FiniteMetric) -> Self {
        m.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        assert!(FiniteMetric::new(vec![vec![0.0, 0.5], vec![0.4, 0.0]]).is_err());
    }

    #[test]
    fn rejects_nonzero_diagonal() {
        assert!(FiniteMetric::new(vec![vec![0.1]]).is_err());
    }

    #[test]
    fn line_is_a_metric() {
        let m = FiniteMetric::line(5, 0.25).unwrap();
        assert_eq!(m.diameter(), 1.0);
        assert!(m.max_triangle_violation() <= 0.0);
    }
}
