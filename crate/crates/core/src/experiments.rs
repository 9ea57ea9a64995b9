//! Chapter-order studies and surrogate significance tests over the full
//! analysis pipeline.
//!
//! Everything here is deterministic given (corpus, orders, config, seed):
//! member seeds are derived from the base seed by index, members run in
//! parallel, and aggregation order is fixed.

use rayon::prelude::*;
use serde::Serialize;

use crate::acf;
use crate::error::{Error, Result};
use crate::ingest::ChapterizedCorpus;
use crate::mfdfa::{analyze, fit_hurst, singularity_spectrum, FluctuationMatrix, MfdfaAnalysis, MfdfaConfig};
use crate::series::{concat_in_order, fourier_phase_surrogate, shuffle_sentences, Permutation, RngSeed, TimeSeries};

/// Scalar summary of one spectrum, kept per ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub hurst: f64,
    pub delta_h: f64,
    pub delta_alpha: f64,
    pub alpha_0: f64,
    pub asymmetry: f64,
}

impl From<&MfdfaAnalysis> for SpectrumSummary {
    fn from(a: &MfdfaAnalysis) -> Self {
        Self {
            hurst: a.hurst.hurst(),
            delta_h: a.hurst.delta_h(),
            delta_alpha: a.spectrum.delta_alpha,
            alpha_0: a.spectrum.alpha_0,
            asymmetry: a.spectrum.asymmetry,
        }
    }
}

/// Run the full pipeline once per chapter order, with identical settings.
pub fn run_order_study(
    corpus: &ChapterizedCorpus,
    orders: &[Permutation],
    cfg: &MfdfaConfig,
) -> Result<Vec<MfdfaAnalysis>> {
    orders
        .iter()
        .map(|perm| analyze(&concat_in_order(corpus, perm)?, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleMember {
    pub index: usize,
    pub seed: u64,
    pub summary: SpectrumSummary,
}

/// Aggregate over random chapter permutations.
///
/// `F_q(s)` is averaged across members in log space (the geometric mean),
/// because the Hurst exponents are log-log slopes; the averaged matrix is
/// then refit for the ensemble spectrum. Per-member summaries are retained
/// so both average-then-fit and fit-then-average views are available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub n_members: usize,
    pub mean_fluctuation: FluctuationMatrix,
    pub ensemble_summary: SpectrumSummary,
    pub members: Vec<EnsembleMember>,
    /// (member index, seed, error message) for failed members.
    pub failures: Vec<(usize, u64, String)>,
}

pub fn run_permutation_ensemble(
    corpus: &ChapterizedCorpus,
    n_perms: usize,
    seed: RngSeed,
    cfg: &MfdfaConfig,
) -> Result<EnsembleResult> {
    if n_perms == 0 {
        return Err(Error::InvalidConfig("ensemble needs at least one member".into()));
    }
    let results: Vec<(usize, u64, Result<MfdfaAnalysis>)> = (0..n_perms)
        .into_par_iter()
        .map(|i| {
            let member_seed = seed.child(i as u64);
            let perm = Permutation::random(corpus.chapter_count(), member_seed);
            let analysis = concat_in_order(corpus, &perm).and_then(|s| analyze(&s, cfg));
            (i, member_seed.0, analysis)
        })
        .collect();

    let mut members = Vec::new();
    let mut failures = Vec::new();
    let mut log_sum: Option<Vec<Vec<f64>>> = None;
    let mut template: Option<FluctuationMatrix> = None;
    for (index, member_seed, outcome) in results {
        match outcome {
            Ok(analysis) => {
                let acc = log_sum.get_or_insert_with(|| {
                    vec![vec![0.0; analysis.fluctuation.q_grid.len()]; analysis.fluctuation.scales.len()]
                });
                for (row, frow) in acc.iter_mut().zip(&analysis.fluctuation.values) {
                    for (cell, &f) in row.iter_mut().zip(frow) {
                        *cell += f.ln();
                    }
                }
                members.push(EnsembleMember {
                    index,
                    seed: member_seed,
                    summary: SpectrumSummary::from(&analysis),
                });
                if template.is_none() {
                    template = Some(analysis.fluctuation);
                }
            }
            Err(e) => failures.push((index, member_seed, e.to_string())),
        }
    }

    if failures.len() * 10 > n_perms {
        return Err(Error::EnsembleDegraded {
            failed: failures.len(),
            total: n_perms,
        });
    }
    let template = template.ok_or(Error::EnsembleDegraded {
        failed: failures.len(),
        total: n_perms,
    })?;

    let n_ok = members.len() as f64;
    let mean_fluctuation = FluctuationMatrix {
        scales: template.scales.clone(),
        q_grid: template.q_grid.clone(),
        values: log_sum
            .unwrap()
            .into_iter()
            .map(|row| row.into_iter().map(|v| (v / n_ok).exp()).collect())
            .collect(),
        window_counts: template.window_counts.clone(),
    };
    let hurst = fit_hurst(&mean_fluctuation, cfg.fit_range)?;
    let spectrum = singularity_spectrum(&hurst)?;
    let ensemble_summary = SpectrumSummary {
        hurst: hurst.hurst(),
        delta_h: hurst.delta_h(),
        delta_alpha: spectrum.delta_alpha,
        alpha_0: spectrum.alpha_0,
        asymmetry: spectrum.asymmetry,
    };
    Ok(EnsembleResult {
        n_members: n_perms,
        mean_fluctuation,
        ensemble_summary,
        members,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SurrogateKind {
    Shuffle,
    Fourier,
}

impl SurrogateKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "shuffle" => Ok(Self::Shuffle),
            "fourier" => Ok(Self::Fourier),
            other => Err(Error::Parse(format!("unknown surrogate kind {other:?}"))),
        }
    }
}

/// A named pass/fail check inside a surrogate report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateCheck {
    pub name: String,
    pub pass: bool,
    pub value: f64,
}

/// Original-vs-surrogate comparison over `n` randomized replicas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateReport {
    pub kind: SurrogateKind,
    pub n: usize,
    pub original: SpectrumSummary,
    /// (seed, summary) per surrogate, in generation order.
    pub surrogates: Vec<(u64, SpectrumSummary)>,
    pub mean_alpha_0: f64,
    pub mean_delta_alpha: f64,
    pub checks: Vec<SurrogateCheck>,
}

pub fn run_surrogate_test(
    s: &TimeSeries,
    kind: SurrogateKind,
    n: usize,
    seed: RngSeed,
    cfg: &MfdfaConfig,
) -> Result<SurrogateReport> {
    if n == 0 {
        return Err(Error::InvalidConfig("surrogate test needs at least one replica".into()));
    }
    let original_analysis = analyze(s, cfg)?;
    let original = SpectrumSummary::from(&original_analysis);

    let runs: Vec<(u64, TimeSeries)> = (0..n)
        .map(|i| {
            let member_seed = seed.child(i as u64);
            let surrogate = match kind {
                SurrogateKind::Shuffle => Ok(shuffle_sentences(s, member_seed)),
                SurrogateKind::Fourier => fourier_phase_surrogate(s, member_seed),
            }?;
            Ok((member_seed.0, surrogate))
        })
        .collect::<Result<Vec<_>>>()?;
    let surrogates: Vec<(u64, SpectrumSummary)> = runs
        .par_iter()
        .map(|(member_seed, surrogate)| {
            let analysis = analyze(surrogate, cfg)?;
            Ok((*member_seed, SpectrumSummary::from(&analysis)))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_f = surrogates.len() as f64;
    let mean_alpha_0 = surrogates.iter().map(|(_, s)| s.alpha_0).sum::<f64>() / n_f;
    let mean_delta_alpha = surrogates.iter().map(|(_, s)| s.delta_alpha).sum::<f64>() / n_f;

    let mut checks = vec![SurrogateCheck {
        name: "width_reduced".into(),
        pass: mean_delta_alpha < original.delta_alpha,
        value: mean_delta_alpha,
    }];
    match kind {
        SurrogateKind::Shuffle => {
            let first = &runs[0].1;
            let mut a = first.values.clone();
            let mut b = s.values.clone();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            checks.push(SurrogateCheck {
                name: "histogram_preserved".into(),
                pass: a == b,
                value: if a == b { 1.0 } else { 0.0 },
            });
            let max_lag = 100.min(s.len() / 2 - 1);
            let mut below = 0.0;
            for (_, surrogate) in &runs {
                below += acf::acf(surrogate, max_lag)?.fraction_below_noise();
            }
            below /= n_f;
            checks.push(SurrogateCheck {
                name: "acf_suppressed".into(),
                pass: below >= 0.9,
                value: below,
            });
        }
        SurrogateKind::Fourier => {
            checks.push(SurrogateCheck {
                name: "alpha0_near_half".into(),
                pass: (mean_alpha_0 - 0.5).abs() <= 0.05,
                value: mean_alpha_0,
            });
        }
    }

    Ok(SurrogateReport {
        kind,
        n,
        original,
        surrogates,
        mean_alpha_0,
        mean_delta_alpha,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weibull::WeibullParams;

    /// Corpus of i.i.d. discrete-Weibull chapters.
    fn synthetic_corpus(chapters: usize, sentences: usize, seed: u64) -> ChapterizedCorpus {
        let params = WeibullParams::new(0.25, 1.1).unwrap();
        let chapters: Vec<Vec<u64>> = (0..chapters)
            .map(|i| {
                let s = params.sample(sentences, RngSeed(seed + i as u64)).unwrap();
                s.values.iter().map(|&v| v as u64 + 1).collect()
            })
            .collect();
        let labels = (1..=chapters.len()).map(|i| i.to_string()).collect();
        ChapterizedCorpus::new(chapters, labels, "synthetic").unwrap()
    }

    #[test]
    fn identical_orders_give_identical_spectra() {
        let corpus = synthetic_corpus(20, 40, 5);
        let cfg = MfdfaConfig::for_series(&corpus.printed_series()).unwrap();
        let perm = Permutation::random(20, RngSeed(3));
        let out = run_order_study(&corpus, &[perm.clone(), perm], &cfg).unwrap();
        assert_eq!(out[0].spectrum, out[1].spectrum);
        assert_eq!(out[0].fluctuation, out[1].fluctuation);
    }

    #[test]
    fn iid_chapters_are_order_invariant() {
        let corpus = synthetic_corpus(40, 60, 11);
        let cfg = MfdfaConfig::for_series(&corpus.printed_series()).unwrap();
        let orders = vec![
            Permutation::identity(40),
            Permutation::random(40, RngSeed(1)),
            Permutation::random(40, RngSeed(2)),
        ];
        let out = run_order_study(&corpus, &orders, &cfg).unwrap();
        let widths: Vec<f64> = out.iter().map(|a| a.spectrum.delta_alpha).collect();
        let spread = widths.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - widths.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 0.05, "delta_alpha spread {spread} across orders");
    }

    #[test]
    fn singleton_ensemble_matches_order_study() {
        let corpus = synthetic_corpus(15, 30, 7);
        let cfg = MfdfaConfig::for_series(&corpus.printed_series()).unwrap();
        let seed = RngSeed(9);
        let ensemble = run_permutation_ensemble(&corpus, 1, seed, &cfg).unwrap();
        let perm = Permutation::random(15, seed.child(0));
        let direct = run_order_study(&corpus, &[perm], &cfg).unwrap();
        let a = ensemble.ensemble_summary;
        let b = SpectrumSummary::from(&direct[0]);
        assert!((a.delta_alpha - b.delta_alpha).abs() < 1e-9);
        assert!((a.alpha_0 - b.alpha_0).abs() < 1e-9);
        assert!((a.hurst - b.hurst).abs() < 1e-9);
    }

    #[test]
    fn ensemble_mean_stays_in_member_envelope() {
        let corpus = synthetic_corpus(30, 25, 21);
        let cfg = MfdfaConfig::for_series(&corpus.printed_series()).unwrap();
        let result = run_permutation_ensemble(&corpus, 100, RngSeed(17), &cfg).unwrap();
        // A permutation can juxtapose chapters into a constant run longer
        // than the printed order's; such members fail and are recorded.
        assert_eq!(result.members.len() + result.failures.len(), 100);
        assert!(result.failures.len() <= 10);
        let lo = result
            .members
            .iter()
            .map(|m| m.summary.delta_alpha)
            .fold(f64::INFINITY, f64::min);
        let hi = result
            .members
            .iter()
            .map(|m| m.summary.delta_alpha)
            .fold(f64::NEG_INFINITY, f64::max);
        let got = result.ensemble_summary.delta_alpha;
        assert!(
            got >= lo - 1e-9 && got <= hi + 1e-9,
            "ensemble width {got} outside [{lo}, {hi}]"
        );
        // Seeds are all distinct.
        let mut seeds: Vec<u64> = result.members.iter().map(|m| m.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), result.members.len());
    }

    #[test]
    fn ensemble_reports_degradation() {
        let corpus = synthetic_corpus(10, 10, 3);
        // A scale grid far beyond T guarantees every member fails.
        let cfg = MfdfaConfig {
            detrend_order: 2,
            q_grid: crate::mfdfa::q_range(2.0, 0.5),
            scale_grid: vec![6, 8, 10, 12, 16, 1_000_000],
            fit_range: (6, 1_000_000),
        };
        match run_permutation_ensemble(&corpus, 10, RngSeed(1), &cfg) {
            Err(Error::EnsembleDegraded { failed: 10, total: 10 }) => {}
            other => panic!("expected degraded ensemble, got {other:?}"),
        }
    }

    #[test]
    fn shuffle_surrogates_preserve_histogram_and_kill_acf() {
        let params = WeibullParams::new(0.3, 1.0).unwrap();
        let s = crate::synth::clustered_weibull(params, 0.92, 4000, RngSeed(2));
        let cfg = MfdfaConfig::for_series(&s).unwrap();
        let report = run_surrogate_test(&s, SurrogateKind::Shuffle, 5, RngSeed(4), &cfg).unwrap();
        assert_eq!(report.surrogates.len(), 5);
        let check = |name: &str| report.checks.iter().find(|c| c.name == name).unwrap();
        assert!(check("histogram_preserved").pass);
        assert!(check("acf_suppressed").pass, "{:?}", report.checks);
        // Shuffling cannot create memory, so the fitted H drops toward 0.5.
        assert!(report.original.hurst > 0.6);
        for (_, summary) in &report.surrogates {
            assert!((summary.hurst - 0.5).abs() < 0.12);
        }
    }

    #[test]
    fn surrogate_runs_record_distinct_seeds() {
        let s = crate::synth::gaussian_white(2000, RngSeed(6));
        let cfg = MfdfaConfig::for_series(&s).unwrap();
        let report = run_surrogate_test(&s, SurrogateKind::Fourier, 4, RngSeed(8), &cfg).unwrap();
        let mut seeds: Vec<u64> = report.surrogates.iter().map(|(s, _)| *s).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 4);
    }

    #[test]
    fn shuffling_iid_input_changes_nothing_statistical() {
        let s = crate::synth::gaussian_white(5000, RngSeed(10));
        let cfg = MfdfaConfig::for_series(&s).unwrap();
        let report = run_surrogate_test(&s, SurrogateKind::Shuffle, 5, RngSeed(12), &cfg).unwrap();
        assert!(
            (report.mean_alpha_0 - report.original.alpha_0).abs() < 0.05,
            "alpha_0 moved: {} vs {}",
            report.mean_alpha_0,
            report.original.alpha_0
        );
    }
}
