//! Multifractal detrended fluctuation analysis.
//!
//! Pipeline: cumulative-sum profile -> non-overlapping windows of length `s`
//! tiled from both ends -> per-window polynomial detrending of order `m` ->
//! q-generalized averages `F_q(s)` of the window variances -> per-q log-log
//! slopes `h(q)` -> the multifractal spectra `tau(q)` and `f(alpha)`.
//!
//! The mean is not subtracted before profiling: the cumulative sum drifts
//! linearly with the series mean and the order-m (m >= 1) window fit absorbs
//! that drift. The `q = 0` average, undefined in the power-mean form, is the
//! logarithmic limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Grid and detrending settings for one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaConfig {
    /// Detrending polynomial order `m`.
    pub detrend_order: usize,
    /// Moment orders; must be symmetric about 0.
    pub q_grid: Vec<f64>,
    /// Window sizes, ascending; every `s > m + 1` and `s <= T/5`.
    pub scale_grid: Vec<usize>,
    /// Inclusive scale bounds used for the `h(q)` slope fit.
    pub fit_range: (usize, usize),
}

impl MfdfaConfig {
    /// Default configuration for a series: `m = 2`, `q` from -7 to 7 in
    /// steps of 0.25, and 50 log-spaced scales from
    /// `max(2(m+1), longest constant run + 2)` up to `T/5`.
    ///
    /// A window of length `run + 1` holds exactly `run` increments, so the
    /// whole constant run can fall inside one window and detrend to zero
    /// variance; the minimum scale therefore sits one above that.
    pub fn for_series(s: &TimeSeries) -> Result<Self> {
        Self::with_order(s, 2)
    }

    pub fn with_order(s: &TimeSeries, detrend_order: usize) -> Result<Self> {
        let t = s.len();
        let s_min = (2 * (detrend_order + 1)).max(longest_constant_run(&s.values) + 2);
        let s_max = t / 5;
        if s_max < s_min {
            return Err(Error::InvalidConfig(format!(
                "series too short for detrend order {detrend_order}: T/5 = {s_max} < minimum scale {s_min}"
            )));
        }
        let cfg = Self {
            detrend_order,
            q_grid: q_range(7.0, 0.25),
            scale_grid: log_spaced_scales(s_min, s_max, 50),
            fit_range: (s_min, s_max),
        };
        cfg.validate(t)?;
        Ok(cfg)
    }

    pub fn with_fit_range(mut self, lo: usize, hi: usize) -> Self {
        self.fit_range = (lo, hi);
        self
    }

    pub fn with_q_range(mut self, q_max: f64, step: f64) -> Self {
        self.q_grid = q_range(q_max, step);
        self
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if self.detrend_order == 0 || self.detrend_order > 10 {
            return Err(Error::InvalidConfig(format!(
                "detrend order must be in 1..=10, got {}",
                self.detrend_order
            )));
        }
        if self.scale_grid.is_empty() {
            return Err(Error::InvalidConfig("scale grid is empty".into()));
        }
        if !self.scale_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("scale grid must be strictly ascending".into()));
        }
        let s_min = self.scale_grid[0];
        let s_max = *self.scale_grid.last().unwrap();
        if s_min <= self.detrend_order + 1 {
            return Err(Error::ScaleTooSmall {
                scale: s_min,
                order: self.detrend_order,
            });
        }
        if s_max > t / 5 {
            return Err(Error::InvalidConfig(format!(
                "maximum scale {s_max} exceeds T/5 = {}",
                t / 5
            )));
        }
        if self.q_grid.is_empty() {
            return Err(Error::InvalidConfig("q grid is empty".into()));
        }
        if !self.q_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("q grid must be strictly ascending".into()));
        }
        for &q in &self.q_grid {
            if !self.q_grid.iter().any(|&r| (r + q).abs() < 1e-9) {
                return Err(Error::InvalidConfig(format!(
                    "q grid must be symmetric about 0; {q} has no mirror"
                )));
            }
        }
        if self.fit_range.0 > self.fit_range.1 {
            return Err(Error::InvalidConfig("fit range is reversed".into()));
        }
        Ok(())
    }
}

/// Symmetric q grid from `-q_max` to `q_max` in steps of `step`, 0 included.
pub fn q_range(q_max: f64, step: f64) -> Vec<f64> {
    let n = (q_max / step).round() as i64;
    (-n..=n).map(|k| k as f64 * step).collect()
}

/// `n` log-spaced integer scales between `s_min` and `s_max`, deduplicated.
pub fn log_spaced_scales(s_min: usize, s_max: usize, n: usize) -> Vec<usize> {
    if s_max <= s_min {
        return vec![s_min];
    }
    let (lo, hi) = ((s_min as f64).ln(), (s_max as f64).ln());
    let mut scales: Vec<usize> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (lo + t * (hi - lo)).exp().round() as usize
        })
        .collect();
    scales.dedup();
    scales
}

/// Length of the longest run of equal consecutive values.
pub fn longest_constant_run(values: &[f64]) -> usize {
    let mut longest = 1;
    let mut run = 1;
    for w in values.windows(2) {
        if w[0] == w[1] {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 1;
        }
    }
    longest
}

/// The integrated series `x_i = u_1 + ... + u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub x: Vec<f64>,
}

pub fn profile(s: &TimeSeries) -> Profile {
    let mut x = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    for &u in &s.values {
        acc += u;
        x.push(acc);
    }
    Profile { x }
}

/// Least-squares polynomial fit shared by all windows of one size.
///
/// Window positions are mapped to `z` in [-1, 1], so the Gram matrix of the
/// monomial basis depends only on (window length, order) and its Cholesky
/// factor is computed once per scale.
struct PolyFitter {
    z: Vec<f64>,
    chol: Vec<Vec<f64>>,
    order: usize,
}

impl PolyFitter {
    fn new(len: usize, order: usize) -> Self {
        let z: Vec<f64> = (0..len)
            .map(|t| 2.0 * t as f64 / (len - 1) as f64 - 1.0)
            .collect();
        // Power sums P_d = sum z^d for d = 0..=2m, then G[a][b] = P_{a+b}.
        let mut power_sums = vec![0.0; 2 * order + 1];
        for &zt in &z {
            let mut pw = 1.0;
            for p in power_sums.iter_mut() {
                *p += pw;
                pw *= zt;
            }
        }
        let dim = order + 1;
        let mut gram = vec![vec![0.0; dim]; dim];
        for (a, row) in gram.iter_mut().enumerate() {
            for (b, g) in row.iter_mut().enumerate() {
                *g = power_sums[a + b];
            }
        }
        let chol = cholesky(&gram).expect("monomial Gram matrix is positive definite for m <= 10");
        Self { z, chol, order }
    }

    /// Mean squared residual of the order-m fit to `y`.
    fn residual_variance(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.z.len());
        let dim = self.order + 1;
        let mut rhs = vec![0.0; dim];
        for (&yt, &zt) in y.iter().zip(&self.z) {
            let mut pw = 1.0;
            for r in rhs.iter_mut() {
                *r += yt * pw;
                pw *= zt;
            }
        }
        let coeffs = chol_solve(&self.chol, &rhs);
        // Residuals are evaluated explicitly (Horner) rather than via the
        // normal-equation identity, which cancels catastrophically when the
        // fit is nearly exact.
        let mut ss = 0.0;
        for (&yt, &zt) in y.iter().zip(&self.z) {
            let mut fit = 0.0;
            for &c in coeffs.iter().rev() {
                fit = fit * zt + c;
            }
            let r = yt - fit;
            ss += r * r;
        }
        ss / y.len() as f64
    }
}

fn cholesky(g: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * w[k];
        }
        w[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = w[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Detrended variances of the `2*floor(T/s)` windows at one scale: the first
/// half tiles from the left end of the profile, the second half from the
/// right end.
pub fn window_variances(profile: &Profile, scale: usize, order: usize) -> Result<Vec<f64>> {
    if scale <= order + 1 {
        return Err(Error::ScaleTooSmall { scale, order });
    }
    let t = profile.x.len();
    let windows = t / scale;
    if windows == 0 {
        return Err(Error::InvalidConfig(format!(
            "scale {scale} exceeds series length {t}"
        )));
    }
    let fitter = PolyFitter::new(scale, order);
    let mut out = Vec::with_capacity(2 * windows);
    for v in 0..windows {
        out.push(fitter.residual_variance(&profile.x[v * scale..(v + 1) * scale]));
    }
    let offset = t - windows * scale;
    for v in 0..windows {
        let start = offset + v * scale;
        out.push(fitter.residual_variance(&profile.x[start..start + scale]));
    }
    Ok(out)
}

/// Order-q generalized average of the window root-variances.
///
/// For `q = 0` the logarithmic limit is used. Any exactly zero variance with
/// `q <= 0` is degenerate; the caller must raise the minimum scale above the
/// longest constant run of the input.
pub fn fluctuation(variances: &[f64], q: f64) -> Result<f64> {
    let n = variances.len() as f64;
    let degenerate = Err(Error::DegenerateWindow { scale: None });
    if q == 0.0 {
        let mut acc = 0.0;
        for &v in variances {
            if v <= 0.0 {
                return degenerate;
            }
            acc += v.ln();
        }
        Ok((acc / (2.0 * n)).exp())
    } else {
        let mut acc = 0.0;
        for &v in variances {
            if v <= 0.0 && q < 0.0 {
                return degenerate;
            }
            acc += v.powf(q / 2.0);
        }
        let f = (acc / n).powf(1.0 / q);
        if f.is_finite() && f > 0.0 {
            Ok(f)
        } else {
            degenerate
        }
    }
}

/// `F_q(s)` on the full (q, s) grid plus the per-scale window counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationMatrix {
    pub scales: Vec<usize>,
    pub q_grid: Vec<f64>,
    /// `values[scale_index][q_index]`.
    pub values: Vec<Vec<f64>>,
    /// `M_s` per scale; the number of windows averaged is `2 * M_s`.
    pub window_counts: Vec<usize>,
}

impl FluctuationMatrix {
    pub fn f(&self, scale_index: usize, q_index: usize) -> f64 {
        self.values[scale_index][q_index]
    }
}

/// Evaluate `F_q(s)` over the configured grid.
///
/// Scales are processed in parallel; window variances are computed once per
/// scale and reused across all q. Per-scale summation order is fixed, so the
/// result does not depend on the worker count.
pub fn compute_grid(s: &TimeSeries, cfg: &MfdfaConfig) -> Result<FluctuationMatrix> {
    cfg.validate(s.len())?;
    let prof = profile(s);
    let rows: Vec<(Vec<f64>, usize)> = cfg
        .scale_grid
        .par_iter()
        .map(|&scale| {
            let vars = window_variances(&prof, scale, cfg.detrend_order)?;
            let row = cfg
                .q_grid
                .iter()
                .map(|&q| {
                    fluctuation(&vars, q).map_err(|e| match e {
                        Error::DegenerateWindow { .. } => Error::DegenerateWindow { scale: Some(scale) },
                        other => other,
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((row, vars.len() / 2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (values, window_counts) = rows.into_iter().unzip();
    Ok(FluctuationMatrix {
        scales: cfg.scale_grid.clone(),
        q_grid: cfg.q_grid.clone(),
        values,
        window_counts,
    })
}

/// Generalized Hurst exponents: per-q slope of `ln F_q(s)` against `ln s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HurstFunction {
    pub q_grid: Vec<f64>,
    pub h: Vec<f64>,
    /// Coefficient of determination of each per-q fit.
    pub r2: Vec<f64>,
    /// Scale bounds actually used.
    pub fit_range: (usize, usize),
}

impl HurstFunction {
    /// `h` at the grid point closest to `q`.
    pub fn h_at(&self, q: f64) -> f64 {
        let (i, _) = self
            .q_grid
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - q).abs().total_cmp(&(*b - q).abs()))
            .expect("q grid is non-empty");
        self.h[i]
    }

    /// The classic Hurst exponent `H = h(2)`.
    pub fn hurst(&self) -> f64 {
        self.h_at(2.0)
    }

    /// Spread `h(q_min) - h(q_max)`, reported with a positive sign for the
    /// usual non-increasing h.
    pub fn delta_h(&self) -> f64 {
        self.h.first().unwrap() - self.h.last().unwrap()
    }

    /// Restriction to the sub-grid with `|q| <= q_max`.
    pub fn restrict(&self, q_max: f64) -> HurstFunction {
        let keep: Vec<usize> = (0..self.q_grid.len())
            .filter(|&i| self.q_grid[i].abs() <= q_max + 1e-9)
            .collect();
        HurstFunction {
            q_grid: keep.iter().map(|&i| self.q_grid[i]).collect(),
            h: keep.iter().map(|&i| self.h[i]).collect(),
            r2: keep.iter().map(|&i| self.r2[i]).collect(),
            fit_range: self.fit_range,
        }
    }
}

/// Fit `h(q)` over the scales inside `fit_range` (inclusive bounds).
pub fn fit_hurst(fm: &FluctuationMatrix, fit_range: (usize, usize)) -> Result<HurstFunction> {
    let (lo, hi) = fit_range;
    let idx: Vec<usize> = (0..fm.scales.len())
        .filter(|&i| fm.scales[i] >= lo && fm.scales[i] <= hi)
        .collect();
    if idx.len() < 5 {
        return Err(Error::BadFitRange {
            lo,
            hi,
            selected: idx.len(),
        });
    }
    let log_s: Vec<f64> = idx.iter().map(|&i| (fm.scales[i] as f64).ln()).collect();
    let mut h = Vec::with_capacity(fm.q_grid.len());
    let mut r2 = Vec::with_capacity(fm.q_grid.len());
    for qi in 0..fm.q_grid.len() {
        let log_f: Vec<f64> = idx.iter().map(|&i| fm.values[i][qi].ln()).collect();
        let (slope, _, r) = linear_fit(&log_s, &log_f);
        h.push(slope);
        r2.push(r);
    }
    Ok(HurstFunction {
        q_grid: fm.q_grid.clone(),
        h,
        r2,
        fit_range,
    })
}

/// OLS slope, intercept, and r^2.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// The mass exponents `tau(q) = q h(q) - 1` plus a linearity statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSpectrum {
    pub q_grid: Vec<f64>,
    pub tau: Vec<f64>,
    /// Maximum deviation of tau from the chord between its endpoints;
    /// near zero for a monofractal.
    pub max_chord_deviation: f64,
}

pub fn tau_spectrum(h: &HurstFunction) -> TauSpectrum {
    let tau: Vec<f64> = h.q_grid.iter().zip(&h.h).map(|(&q, &hq)| q * hq - 1.0).collect();
    let (q0, qn) = (h.q_grid[0], *h.q_grid.last().unwrap());
    let (t0, tn) = (tau[0], *tau.last().unwrap());
    let max_chord_deviation = h
        .q_grid
        .iter()
        .zip(&tau)
        .map(|(&q, &t)| {
            let chord = t0 + (q - q0) / (qn - q0) * (tn - t0);
            (t - chord).abs()
        })
        .fold(0.0, f64::max);
    TauSpectrum {
        q_grid: h.q_grid.clone(),
        tau,
        max_chord_deviation,
    }
}

/// Singularity spectrum from the Legendre transform of `h(q)`:
/// `alpha = h + q h'`, `f(alpha) = q (alpha - h) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultifractalSpectrum {
    pub q_grid: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f_alpha: Vec<f64>,
    pub tau: Vec<f64>,
    /// Spectrum width `alpha_max - alpha_min`.
    pub delta_alpha: f64,
    /// Location of the spectrum apex (alpha at the maximum of f).
    pub alpha_0: f64,
    /// Branch asymmetry `(dL - dR) / (dL + dR)` around the apex; positive
    /// means a longer left branch (multiscaling driven by large events).
    pub asymmetry: f64,
    /// Set when alpha is not monotone in q beyond tolerance; the transform
    /// folded and branch readings are unreliable.
    pub folded: bool,
}

pub fn singularity_spectrum(h: &HurstFunction) -> Result<MultifractalSpectrum> {
    let q = &h.q_grid;
    let n = q.len();
    if n < 3 {
        return Err(Error::InvalidConfig("q grid too small for derivatives".into()));
    }
    if q.windows(2).any(|w| w[1] - w[0] > 0.5 + 1e-9) {
        return Err(Error::InvalidConfig(
            "q grid step must be <= 0.5 for finite-difference derivatives".into(),
        ));
    }
    // h'(q): central differences inside, one-sided at the ends.
    let mut dh = vec![0.0; n];
    dh[0] = (h.h[1] - h.h[0]) / (q[1] - q[0]);
    dh[n - 1] = (h.h[n - 1] - h.h[n - 2]) / (q[n - 1] - q[n - 2]);
    for i in 1..n - 1 {
        dh[i] = (h.h[i + 1] - h.h[i - 1]) / (q[i + 1] - q[i - 1]);
    }
    let alpha: Vec<f64> = (0..n).map(|i| h.h[i] + q[i] * dh[i]).collect();
    let f_alpha: Vec<f64> = (0..n).map(|i| q[i] * (alpha[i] - h.h[i]) + 1.0).collect();
    let tau: Vec<f64> = (0..n).map(|i| q[i] * h.h[i] - 1.0).collect();

    let alpha_min = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
    let alpha_max = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let delta_alpha = alpha_max - alpha_min;
    let apex = (0..n)
        .max_by(|&a, &b| f_alpha[a].total_cmp(&f_alpha[b]))
        .expect("non-empty grid");
    let alpha_0 = alpha[apex];
    let left = alpha_0 - alpha_min;
    let right = alpha_max - alpha_0;
    let asymmetry = if left + right == 0.0 {
        0.0
    } else {
        (left - right) / (left + right)
    };
    // alpha should decrease with q; small ripples are normal estimation
    // noise, so flag only reversals beyond 10% of the width.
    let tol = (0.1 * delta_alpha).max(0.01);
    let folded = alpha.windows(2).any(|w| w[1] - w[0] > tol);
    Ok(MultifractalSpectrum {
        q_grid: q.clone(),
        alpha,
        f_alpha,
        tau,
        delta_alpha,
        alpha_0,
        asymmetry,
        folded,
    })
}

/// Full analysis bundle for one series under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfdfaAnalysis {
    pub fluctuation: FluctuationMatrix,
    pub hurst: HurstFunction,
    pub spectrum: MultifractalSpectrum,
}

pub fn analyze(s: &TimeSeries, cfg: &MfdfaConfig) -> Result<MfdfaAnalysis> {
    let fluctuation = compute_grid(s, cfg)?;
    let hurst = fit_hurst(&fluctuation, cfg.fit_range)?;
    let spectrum = singularity_spectrum(&hurst)?;
    Ok(MfdfaAnalysis {
        fluctuation,
        hurst,
        spectrum,
    })
}
