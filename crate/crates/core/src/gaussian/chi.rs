use super::special::{ln_gamma, reg_lower_gamma};
use crate::error::{CoreError, Result};

/// One-dimensional chi distribution with `m` degrees of freedom: the law of
/// the Euclidean norm of an m-dimensional standard Gaussian vector.
///
/// Density K t^{m-1} e^{-t^2/2} with K = 1 / (2^{m/2-1} Gamma(m/2)); the CDF
/// is the regularized lower incomplete gamma P(m/2, t^2/2).
#[derive(Clone, Debug)]
pub struct ChiDistribution {
    m: usize,
    log_norm: f64,
}

impl ChiDistribution {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(CoreError::Invalid("chi distribution needs m >= 1 degrees of freedom".into()));
        }
        let a = m as f64 / 2.0;
        let log_norm = -((a - 1.0) * std::f64::consts::LN_2 + ln_gamma(a));
        Ok(ChiDistribution { m, log_norm })
    }

    pub fn degrees(&self) -> usize {
        self.m
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(CoreError::NegativeChiArgument { t });
        }
        if t.is_infinite() {
            return Ok(1.0);
        }
        Ok(reg_lower_gamma(self.m as f64 / 2.0, t * t / 2.0))
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(CoreError::NegativeChiArgument { t });
        }
        if t.is_infinite() {
            return Ok(0.0);
        }
        if t == 0.0 {
            // t^{m-1} -> 1 for m = 1, 0 otherwise.
            return Ok(if self.m == 1 { self.log_norm.exp() } else { 0.0 });
        }
        Ok((self.log_norm + (self.m as f64 - 1.0) * t.ln() - t * t / 2.0).exp())
    }
}
