use crate::error::{CoreError, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Lower Cholesky factor L of a covariance matrix, L L^T = Sigma.
#[derive(Clone, Debug)]
pub struct CovarianceFactor {
    m: usize,
    l: Vec<f64>,
}

impl CovarianceFactor {
    pub fn new(m: usize, sigma: &[f64]) -> Result<Self> {
        if m == 0 || sigma.len() != m * m {
            return Err(CoreError::DimensionMismatch(format!(
                "covariance must be m x m with m >= 1, got m={m} and {} entries",
                sigma.len()
            )));
        }
        let scale = sigma.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..m {
            for j in (i + 1)..m {
                let diff = (sigma[i * m + j] - sigma[j * m + i]).abs();
                if diff > SYMMETRY_TOL * scale {
                    return Err(CoreError::NotSymmetric { i, j, diff });
                }
            }
        }
        let mut l = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = sigma[i * m + j];
                for k in 0..j {
                    s -= l[i * m + k] * l[j * m + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(CoreError::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[i * m + i] = s.sqrt();
                } else {
                    l[i * m + j] = s / l[j * m + j];
                }
            }
        }
        Ok(CovarianceFactor { m, l })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Row-major lower-triangular factor.
    pub fn factor(&self) -> &[f64] {
        &self.l
    }

    /// L v, mapping standard-normal coordinates to covariance Sigma.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.m {
            return Err(CoreError::DimensionMismatch(format!(
                "vector has {} entries, expected {}",
                v.len(),
                self.m
            )));
        }
        let mut out = vec![0.0; self.m];
        for i in 0..self.m {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.l[i * self.m + j] * v[j];
            }
            out[i] = s;
        }
        Ok(out)
    }

    /// L L^T, for round-trip checks.
    pub fn reconstruct(&self) -> Vec<f64> {
        let m = self.m;
        let mut s = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for k in 0..=i.min(j) {
                    acc += self.l[i * m + k] * self.l[j * m + k];
                }
                s[i * m + j] = acc;
            }
        }
        s
    }
}
