//! Discrete Weibull distribution: evaluation, inversion sampling,
//! histogramming, and least-squares parameter fitting.
//!
//! The distribution has pmf `f(k) = (1-p)^(k^beta) - (1-p)^((k+1)^beta)` and
//! CDF `F(k) = 1 - (1-p)^(k^beta)` with `p` in (0,1) and `beta > 0`. For
//! `beta = 1` it reduces to the geometric distribution with success
//! probability `p`; `beta > 1` means the hazard (the chance of a mark after
//! `k` words) grows with `k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{RngSeed, TimeSeries};
use rand::Rng;

/// Validated parameter pair of the discrete Weibull distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeibullParams {
    p: f64,
    beta: f64,
}

impl WeibullParams {
    pub fn new(p: f64, beta: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0 && p.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "p = {p}, beta = {beta}; need 0 < p < 1 and beta > 0"
            )));
        }
        Ok(Self { p, beta })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Survival weight `(1-p)^(k^beta)`, computed as `exp(k^beta ln(1-p))`
    /// so large `k` underflows to 0 instead of overflowing.
    fn survival(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        ((k as f64).powf(self.beta) * (-self.p).ln_1p()).exp()
    }

    /// Probability of exactly `k`.
    pub fn pmf(&self, k: u64) -> f64 {
        self.survival(k) - self.survival(k + 1)
    }

    /// `F(k) = 1 - (1-p)^(k^beta)`: the probability of a value below `k`,
    /// so `F(0) = 0` and `F(k+1) - F(k) = f(k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        1.0 - self.survival(k)
    }

    /// Survival function `1 - F(k) = (1-p)^(k^beta)`, exact where the CDF
    /// complement would cancel to zero.
    pub fn sf(&self, k: u64) -> f64 {
        self.survival(k)
    }

    /// Smallest `k` with `F(k+1) > u`; the inversion map used by
    /// [`WeibullParams::sample`].
    pub fn quantile(&self, u: f64) -> u64 {
        debug_assert!((0.0..1.0).contains(&u));
        let ratio = (-u).ln_1p() / (-self.p).ln_1p();
        let w = ratio.powf(1.0 / self.beta);
        let k = w.ceil() - 1.0;
        if k < 0.0 {
            0
        } else {
            k as u64
        }
    }

    /// `n` i.i.d. draws by CDF inversion, deterministic per seed.
    pub fn sample(&self, n: usize, seed: RngSeed) -> Result<TimeSeries> {
        if n == 0 {
            return Err(Error::SeriesTooShort { needed: 1, got: 0 });
        }
        let mut rng = seed.rng();
        let values = (0..n)
            .map(|_| self.quantile(rng.gen::<f64>()) as f64)
            .collect();
        Ok(TimeSeries {
            values,
            label: format!("dweibull-p{}-b{}", self.p, self.beta),
        })
    }
}

/// Integer-bin histogram with non-negative real weights.
///
/// Weights are plain counts for empirical data but may carry exact
/// probabilities when a distribution itself is fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    weights: Vec<f64>,
    total: f64,
}

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut weights: Vec<f64> = Vec::new();
        let mut any = false;
        for v in values {
            let k = v as usize;
            if k >= weights.len() {
                weights.resize(k + 1, 0.0);
            }
            weights[k] += 1.0;
            any = true;
        }
        if !any {
            return Err(Error::EmptyInput);
        }
        let total = weights.iter().sum();
        Ok(Self { weights, total })
    }

    /// Build from a series of non-negative integer-valued observations.
    pub fn from_series(s: &TimeSeries) -> Result<Self> {
        let mut values = Vec::with_capacity(s.len());
        for &v in &s.values {
            if v < 0.0 || (v - v.round()).abs() > 1e-9 {
                return Err(Error::InvalidParams(format!(
                    "histogram input must be non-negative integers, got {v}"
                )));
            }
            values.push(v.round() as u64);
        }
        Self::from_values(values)
    }

    /// Build from per-bin weights indexed by `k` (for example exact pmf
    /// values).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParams("histogram weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self { weights, total })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn k_max(&self) -> u64 {
        (self.weights.len() - 1) as u64
    }

    pub fn count(&self, k: u64) -> f64 {
        self.weights.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn frequency(&self, k: u64) -> f64 {
        self.count(k) / self.total
    }

    pub fn populated_bins(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    /// `(k, count, frequency)` over populated bins, ascending in `k`.
    pub fn iter_populated(&self) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(move |(k, &w)| (k as u64, w, w / self.total))
    }
}

/// Result of a least-squares fit of [`WeibullParams`] to a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeibullFit {
    pub params: WeibullParams,
    /// Sum of squared residuals over the bins used.
    pub sse: f64,
    pub bins_used: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Fit residuals of ln(frequency) against ln(pmf), emphasizing the tail
    /// as on a semi-logarithmic plot.
    pub log_weights: bool,
}

/// Least-squares fit over populated bins with the default options.
///
/// Seeds a coarse (p, beta) grid, refines the best candidates with a
/// deterministic Nelder-Mead simplex in transformed coordinates, and breaks
/// ties by lowest SSE then lexicographic parameters, so the result depends
/// only on the histogram.
pub fn fit(hist: &Histogram) -> Result<WeibullFit> {
    fit_with(hist, FitOptions::default())
}

pub fn fit_with(hist: &Histogram, opts: FitOptions) -> Result<WeibullFit> {
    let bins: Vec<(u64, f64)> = hist.iter_populated().map(|(k, _, f)| (k, f)).collect();
    if bins.len() < 3 {
        return Err(Error::FitFailed(format!(
            "need at least 3 populated bins, got {}",
            bins.len()
        )));
    }

    let sse = |p: f64, beta: f64| -> f64 {
        let params = WeibullParams { p, beta };
        bins.iter()
            .map(|&(k, freq)| {
                let model = params.pmf(k);
                let d = if opts.log_weights {
                    freq.max(f64::MIN_POSITIVE).ln() - model.max(f64::MIN_POSITIVE).ln()
                } else {
                    freq - model
                };
                d * d
            })
            .sum()
    };

    // Coarse grid: p in 0.05..=0.95 step 0.05, beta in 0.25..=4.0 step 0.25.
    let mut candidates: Vec<(f64, f64, f64)> = Vec::with_capacity(19 * 16);
    for pi in 1..=19 {
        let p = pi as f64 * 0.05;
        for bi in 1..=16 {
            let beta = bi as f64 * 0.25;
            candidates.push((sse(p, beta), p, beta));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });

    // Refine the three best grid points in (logit p, ln beta) space, which
    // keeps the simplex inside the parameter domain.
    let objective = |x: [f64; 2]| {
        let p = 1.0 / (1.0 + (-x[0]).exp());
        let beta = x[1].exp();
        sse(p, beta)
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for &(_, p0, b0) in candidates.iter().take(3) {
        let x0 = [(p0 / (1.0 - p0)).ln(), b0.ln()];
        let (x, val) = nelder_mead(objective, x0);
        let p = 1.0 / (1.0 + (-x[0]).exp());
        let beta = x[1].exp();
        // Lowest SSE wins; exact ties break lexicographically on (p, beta).
        let better = match best {
            None => true,
            Some((v, bp, bb)) => {
                val.total_cmp(&v)
                    .then(p.total_cmp(&bp))
                    .then(beta.total_cmp(&bb))
                    .is_lt()
            }
        };
        if better {
            best = Some((val, p, beta));
        }
    }
    let (sse_min, p, beta) = best.expect("at least one refinement ran");
    let params = WeibullParams::new(p, beta)
        .map_err(|e| Error::FitFailed(format!("refined parameters left the domain: {e}")))?;
    Ok(WeibullFit {
        params,
        sse: sse_min,
        bins_used: bins.len(),
    })
}

/// Deterministic 2-D Nelder-Mead with standard coefficients and a fixed
/// initial simplex.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, x0: [f64; 2]) -> ([f64; 2], f64) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink
    const STEP: f64 = 0.25;
    const MAX_ITER: usize = 500;

    let mut simplex = [
        x0,
        [x0[0] + STEP, x0[1]],
        [x0[0], x0[1] + STEP],
    ];
    let mut values = simplex.map(&f);

    for _ in 0..MAX_ITER {
        // Order best..worst.
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.map(|i| simplex[i]);
        values = idx.map(|i| values[i]);

        let spread = values[2] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|x| (x[0] - simplex[0][0]).abs() + (x[1] - simplex[0][1]).abs())
            .fold(0.0, f64::max);
        if spread <= 1e-15 * (1.0 + values[0].abs()) && size <= 1e-10 {
            break;
        }

        let centroid = [
            (simplex[0][0] + simplex[1][0]) / 2.0,
            (simplex[0][1] + simplex[1][1]) / 2.0,
        ];
        let reflect = |t: f64| {
            [
                centroid[0] + t * (centroid[0] - simplex[2][0]),
                centroid[1] + t * (centroid[1] - simplex[2][1]),
            ]
        };

        let xr = reflect(ALPHA);
        let fr = f(xr);
        if fr < values[0] {
            let xe = reflect(GAMMA);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
        } else {
            let xc = reflect(-RHO);
            let fc = f(xc);
            if fc < values[2] {
                simplex[2] = xc;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + SIGMA * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + SIGMA * (simplex[i][1] - simplex[0][1]),
                    ];
                    values[i] = f(simplex[i]);
                }
            }
        }
    }

    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    (simplex[idx[0]], values[idx[0]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, beta: f64) -> WeibullParams {
        WeibullParams::new(p, beta).unwrap()
    }

    #[test]
    fn rejects_out_of_domain_params() {
        assert!(WeibullParams::new(0.0, 1.0).is_err());
        assert!(WeibullParams::new(1.0, 1.0).is_err());
        assert!(WeibullParams::new(0.5, 0.0).is_err());
        assert!(WeibullParams::new(0.5, -1.0).is_err());
        assert!(WeibullParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn pmf_known_values() {
        assert!((params(0.3, 1.0).pmf(0) - 0.3).abs() < 1e-15);
        assert!((params(0.5, 1.0).pmf(2) - 0.125).abs() < 1e-15);
        assert!((params(0.5, 2.0).pmf(1) - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn cdf_known_values() {
        assert_eq!(params(0.5, 2.0).cdf(0), 0.0);
        assert!((params(0.3, 0.7).cdf(1) - 0.3).abs() < 1e-15);
        assert!((params(0.55, 3.0).cdf(1) - 0.55).abs() < 1e-15);
        assert!((params(0.3, 1.0).cdf(1_000_000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_sums_to_one() {
        // Telescoping: the partial sum to k = 1e5 must be within 1e-9 of 1
        // for beta >= 0.5.
        for &(p, beta) in &[(0.1, 0.5), (0.3, 1.0), (0.55, 1.5), (0.8, 3.0)] {
            let params = params(p, beta);
            let sum: f64 = (0..100_000).map(|k| params.pmf(k)).sum();
            assert!((sum - 1.0).abs() < 1e-9, "sum {sum} for p={p}, beta={beta}");
        }
    }

    #[test]
    fn pmf_is_cdf_increment() {
        for &(p, beta) in &[(0.2, 0.6), (0.5, 1.0), (0.7, 2.5)] {
            let params = params(p, beta);
            for k in 0..200 {
                let inc = params.cdf(k + 1) - params.cdf(k);
                assert!((params.pmf(k) - inc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beta_one_is_geometric() {
        for &p in &[0.1, 0.3, 0.5, 0.9] {
            let params = params(p, 1.0);
            for k in 0..100u64 {
                let geometric = p * (1.0 - p).powi(k as i32);
                assert!((params.pmf(k) - geometric).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hazard_monotone_with_beta() {
        let hazard = |params: &WeibullParams, k: u64| params.pmf(k) / params.sf(k);
        let inc = params(0.2, 2.0);
        let dec = params(0.2, 0.5);
        for k in 0..50 {
            assert!(hazard(&inc, k + 1) > hazard(&inc, k), "beta>1 hazard must increase at k={k}");
            assert!(hazard(&dec, k + 1) < hazard(&dec, k), "beta<1 hazard must decrease at k={k}");
        }
        // beta = 1: constant hazard.
        let flat = params(0.4, 1.0);
        for k in 0..50 {
            assert!((hazard(&flat, k) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_geometric_mean() {
        // Geometric with p = 0.5 has mean (1-p)/p = 1.
        let s = params(0.5, 1.0).sample(100_000, RngSeed(42)).unwrap();
        assert!((s.mean() - 1.0).abs() < 0.02, "mean {}", s.mean());
        assert!(s.values.iter().all(|&v| v >= 0.0 && v == v.round()));
    }

    #[test]
    fn sample_matches_cdf() {
        // Kolmogorov-Smirnov distance between the empirical CDF and the
        // model CDF below 0.01 at n = 1e5.
        let params = params(0.55, 1.5);
        let s = params.sample(100_000, RngSeed(7)).unwrap();
        let hist = Histogram::from_series(&s).unwrap();
        let mut ecdf = 0.0;
        let mut ks: f64 = 0.0;
        for k in 0..=hist.k_max() {
            ecdf += hist.frequency(k);
            ks = ks.max((ecdf - params.cdf(k + 1)).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn sample_deterministic() {
        let params = params(0.4, 1.2);
        let a = params.sample(100, RngSeed(3)).unwrap();
        let b = params.sample(100, RngSeed(3)).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn histogram_frequencies_sum_to_one() {
        let hist = Histogram::from_values([1u64, 1, 2, 5, 5, 5]).unwrap();
        let total: f64 = (0..=hist.k_max()).map(|k| hist.frequency(k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(hist.populated_bins(), 3);
        assert_eq!(hist.count(5), 3.0);
        assert_eq!(hist.count(7), 0.0);
    }

    #[test]
    fn fit_recovers_sampled_parameters() {
        let truth = params(0.55, 1.5);
        let s = truth.sample(100_000, RngSeed(11)).unwrap();
        let hist = Histogram::from_series(&s).unwrap();
        let fit = fit(&hist).unwrap();
        assert!(
            (fit.params.p() - 0.55).abs() < 0.02,
            "p = {}",
            fit.params.p()
        );
        assert!(
            (fit.params.beta() - 1.5).abs() < 0.05,
            "beta = {}",
            fit.params.beta()
        );
    }

    #[test]
    fn fit_exact_pmf_is_fixed_point() {
        let truth = params(0.3, 1.0);
        let weights: Vec<f64> = (0..60).map(|k| truth.pmf(k)).collect();
        let hist = Histogram::from_weights(weights).unwrap();
        let fit = fit(&hist).unwrap();
        assert!(fit.sse < 1e-10, "sse = {}", fit.sse);
        assert!((fit.params.p() - 0.3).abs() < 1e-6);
        assert!((fit.params.beta() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fit_needs_three_bins() {
        let hist = Histogram::from_values([2u64, 2, 3]).unwrap();
        assert!(matches!(fit(&hist), Err(Error::FitFailed(_))));
    }

    #[test]
    fn fit_is_deterministic() {
        let s = params(0.35, 0.8).sample(20_000, RngSeed(5)).unwrap();
        let hist = Histogram::from_series(&s).unwrap();
        let a = fit(&hist).unwrap();
        let b = fit(&hist).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn log_weighted_fit_fixed_point() {
        // The zero-residual fixed point holds under any residual weighting.
        let truth = params(0.5, 1.2);
        let weights: Vec<f64> = (0..50).map(|k| truth.pmf(k)).collect();
        let hist = Histogram::from_weights(weights).unwrap();
        let fit = fit_with(&hist, FitOptions { log_weights: true }).unwrap();
        assert!(fit.sse < 1e-10, "sse = {}", fit.sse);
        assert!((fit.params.p() - 0.5).abs() < 1e-5);
        assert!((fit.params.beta() - 1.2).abs() < 1e-5);
    }
}
