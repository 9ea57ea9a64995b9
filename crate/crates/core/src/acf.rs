//! Pearson autocorrelation function with a white-noise significance band.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Autocorrelation values for lags `1..=max_lag` plus the noise band.
///
/// `rho(0) = 1` by convention and is not stored; use [`AcfResult::rho_at`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfResult {
    /// rho at lag `k` is `rho[k - 1]`.
    pub rho: Vec<f64>,
    pub noise_level: f64,
    pub series_len: usize,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.rho.len()
    }

    pub fn rho_at(&self, lag: usize) -> f64 {
        if lag == 0 {
            1.0
        } else {
            self.rho[lag - 1]
        }
    }

    /// Fraction of lags with |rho| below the noise band.
    pub fn fraction_below_noise(&self) -> f64 {
        let below = self.rho.iter().filter(|r| r.abs() < self.noise_level).count();
        below as f64 / self.rho.len() as f64
    }
}

/// Two-sided 95% band for the ACF of white noise: `1.96 / sqrt(T)`.
pub fn noise_level(t: usize) -> f64 {
    1.96 / (t as f64).sqrt()
}

/// Pearson ACF with the biased (full-series variance) denominator:
/// `rho(k) = sum_i (u_i - m)(u_{i+k} - m) / sum_i (u_i - m)^2`.
///
/// The denominator convention matters for comparing against the analytic
/// noise band, which assumes this estimator.
pub fn acf(s: &TimeSeries, max_lag: usize) -> Result<AcfResult> {
    let t = s.len();
    if max_lag == 0 || 2 * max_lag >= t {
        return Err(Error::InvalidConfig(format!(
            "max_lag must satisfy 1 <= max_lag < T/2 (T = {t}, max_lag = {max_lag})"
        )));
    }
    let u = &s.values;
    let mean = s.mean();
    let denom: f64 = u.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if denom == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let rho = (1..=max_lag)
        .map(|k| {
            let num: f64 = (0..t - k)
                .map(|i| (u[i] - mean) * (u[i + k] - mean))
                .sum();
            num / denom
        })
        .collect();
    Ok(AcfResult {
        rho,
        noise_level: noise_level(t),
        series_len: t,
    })
}
