//! Series containers, chapter-order permutations, and surrogate generators.
//!
//! All randomized operations take an explicit [`RngSeed`] and draw from a
//! fixed generator (ChaCha8), so equal seeds produce bit-identical output on
//! every platform and in every build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ChapterizedCorpus;

/// An ordered sequence of observations with a provenance label.
///
/// Values are stored as `f64`; series produced by the ingest module are
/// integer-valued word or character counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort { needed: 1, got: 0 });
        }
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub fn from_counts(counts: &[u64], label: impl Into<String>) -> Result<Self> {
        Self::new(counts.iter().map(|&c| c as f64).collect(), label)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Biased (1/T) sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }
}

/// Seed for the crate's fixed random generator.
///
/// Parallel ensemble workers derive disjoint streams with [`RngSeed::child`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Seed for worker `index`, distinct from the parent for index > 0.
    pub fn child(self, index: u64) -> RngSeed {
        RngSeed(self.0.wrapping_add(index))
    }
}

/// A chapter ordering: either a proper permutation of `1..=n` or, in relaxed
/// form, an arbitrary sequence of valid chapter indices (repeats allowed),
/// which some reading orders require.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    /// 0-based chapter indices in traversal order.
    order: Vec<usize>,
    /// Number of chapters the indices refer to.
    n: usize,
    bijective: bool,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            n,
            bijective: true,
        }
    }

    /// Strict constructor: `one_based` must be a bijection on `1..=n` where
    /// `n` is its length.
    pub fn new(one_based: Vec<usize>) -> Result<Self> {
        let n = one_based.len();
        let mut seen = vec![false; n];
        for &idx in &one_based {
            if idx == 0 || idx > n {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
            if seen[idx - 1] {
                return Err(Error::NotABijection { n });
            }
            seen[idx - 1] = true;
        }
        Ok(Self {
            order: one_based.iter().map(|&i| i - 1).collect(),
            n,
            bijective: true,
        })
    }

    /// Relaxed constructor: any sequence of 1-based indices into an
    /// `n`-chapter corpus.
    pub fn sequence(one_based: Vec<usize>, n: usize) -> Result<Self> {
        for &idx in &one_based {
            if idx == 0 || idx > n {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
        }
        Ok(Self {
            order: one_based.iter().map(|&i| i - 1).collect(),
            n,
            bijective: false,
        })
    }

    /// Uniformly random permutation via Fisher-Yates, deterministic per seed.
    pub fn random(n: usize, seed: RngSeed) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = seed.rng();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        Self {
            order,
            n,
            bijective: true,
        }
    }

    /// Parse the on-disk format: one 1-based chapter index per line.
    /// The strict form requires the lines to be a bijection.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(Self::parse_lines(text)?)
    }

    /// Parse the relaxed form against an `n`-chapter corpus.
    pub fn parse_sequence(text: &str, n: usize) -> Result<Self> {
        Self::sequence(Self::parse_lines(text)?, n)
    }

    fn parse_lines(text: &str) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let idx: usize = line
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: expected a chapter index, got {:?}", lineno + 1, line)))?;
            out.push(idx);
        }
        if out.is_empty() {
            return Err(Error::Parse("permutation file contains no indices".into()));
        }
        Ok(out)
    }

    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for &i in &self.order {
            s.push_str(&(i + 1).to_string());
            s.push('\n');
        }
        s
    }

    /// Inverse permutation; only defined for the bijective form.
    pub fn inverse(&self) -> Result<Self> {
        if !self.bijective {
            return Err(Error::NotABijection { n: self.n });
        }
        let mut inv = vec![0usize; self.n];
        for (pos, &i) in self.order.iter().enumerate() {
            inv[i] = pos;
        }
        Ok(Self {
            order: inv,
            n: self.n,
            bijective: true,
        })
    }

    /// Number of entries in the traversal.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Number of chapters the indices refer to.
    pub fn chapter_count(&self) -> usize {
        self.n
    }

    pub fn is_bijective(&self) -> bool {
        self.bijective
    }

    /// 0-based indices in traversal order.
    pub fn indices(&self) -> &[usize] {
        &self.order
    }
}

/// Concatenate per-chapter sequences in the order given by `perm`.
///
/// The value multiset is preserved for bijective orders; the identity
/// permutation reproduces the printed-order series exactly.
pub fn concat_in_order(corpus: &ChapterizedCorpus, perm: &Permutation) -> Result<TimeSeries> {
    if perm.chapter_count() != corpus.chapter_count() {
        return Err(Error::PermutationSizeMismatch {
            expected: corpus.chapter_count(),
            got: perm.chapter_count(),
        });
    }
    let mut values = Vec::new();
    for &i in perm.indices() {
        values.extend(corpus.chapters[i].iter().map(|&v| v as f64));
    }
    TimeSeries::new(values, format!("{}-reordered", corpus_label(corpus)))
}

fn corpus_label(corpus: &ChapterizedCorpus) -> &str {
    if corpus.label.is_empty() {
        "corpus"
    } else {
        &corpus.label
    }
}

/// Uniform random permutation of the values; the histogram is exactly
/// preserved. Destroys all temporal structure.
pub fn shuffle_sentences(s: &TimeSeries, seed: RngSeed) -> TimeSeries {
    let mut values = s.values.clone();
    let mut rng = seed.rng();
    for i in (1..values.len()).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
    TimeSeries {
        values,
        label: format!("{}-shuffled", s.label),
    }
}

/// Fourier-phase surrogate: keeps the amplitude spectrum (hence mean,
/// variance, and the full linear autocorrelation) and randomizes the phases
/// of the independent half-spectrum, destroying all nonlinear structure.
///
/// The zero-frequency bin is left untouched, which preserves the mean; for
/// even lengths the Nyquist bin is kept as-is so the output stays real.
pub fn fourier_phase_surrogate(s: &TimeSeries, seed: RngSeed) -> Result<TimeSeries> {
    let t = s.len();
    if t < 4 {
        return Err(Error::SeriesTooShort { needed: 4, got: t });
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(t);
    let mut buf: Vec<Complex<f64>> = s.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);

    let mut rng = seed.rng();
    let half = (t - 1) / 2;
    for k in 1..=half {
        let phase = rng.gen::<f64>() * std::f64::consts::TAU;
        let amp = buf[k].norm();
        buf[k] = Complex::from_polar(amp, phase);
        buf[t - k] = buf[k].conj();
    }

    let ifft = planner.plan_fft_inverse(t);
    ifft.process(&mut buf);
    let scale = 1.0 / t as f64;
    let values = buf.iter().map(|c| c.re * scale).collect();
    Ok(TimeSeries {
        values,
        label: format!("{}-phase-surrogate", s.label),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ChapterizedCorpus;

    fn toy_corpus() -> ChapterizedCorpus {
        ChapterizedCorpus::new(
            vec![vec![3, 2], vec![7]],
            vec!["1".into(), "2".into()],
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn identity_concat_is_printed_series() {
        let corpus = toy_corpus();
        let perm = Permutation::identity(2);
        let out = concat_in_order(&corpus, &perm).unwrap();
        assert_eq!(out.values, corpus.printed_series().values);
    }

    #[test]
    fn swapped_concat() {
        let corpus = toy_corpus();
        let perm = Permutation::new(vec![2, 1]).unwrap();
        let out = concat_in_order(&corpus, &perm).unwrap();
        assert_eq!(out.values, vec![7.0, 3.0, 2.0]);
    }

    #[test]
    fn concat_preserves_multiset() {
        let corpus = toy_corpus();
        for seed in 0..20 {
            let perm = Permutation::random(2, RngSeed(seed));
            let mut a = concat_in_order(&corpus, &perm).unwrap().values;
            let mut b = corpus.printed_series().values;
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn concat_size_mismatch() {
        let corpus = toy_corpus();
        let perm = Permutation::identity(3);
        assert!(matches!(
            concat_in_order(&corpus, &perm),
            Err(Error::PermutationSizeMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn inverse_recovers_chapter_blocks() {
        let corpus = ChapterizedCorpus::new(
            vec![vec![1, 2], vec![3], vec![4, 5, 6]],
            vec!["a".into(), "b".into(), "c".into()],
            "t",
        )
        .unwrap();
        let perm = Permutation::new(vec![3, 1, 2]).unwrap();
        // Reorder the chapters by perm, then concatenate with the inverse:
        // that must reproduce the printed series.
        let reordered = ChapterizedCorpus::new(
            perm.indices().iter().map(|&i| corpus.chapters[i].clone()).collect(),
            perm.indices().iter().map(|&i| corpus.labels[i].clone()).collect(),
            "t",
        )
        .unwrap();
        let back = concat_in_order(&reordered, &perm.inverse().unwrap()).unwrap();
        assert_eq!(back.values, corpus.printed_series().values);
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![1, 2, 3]).is_ok());
        assert!(matches!(
            Permutation::new(vec![1, 1, 3]),
            Err(Error::NotABijection { n: 3 })
        ));
        assert!(matches!(
            Permutation::new(vec![0, 1]),
            Err(Error::IndexOutOfRange { index: 0, n: 2 })
        ));
        assert!(matches!(
            Permutation::new(vec![1, 4]),
            Err(Error::IndexOutOfRange { index: 4, n: 2 })
        ));
        // Relaxed form allows repeats but still checks the range.
        assert!(Permutation::sequence(vec![1, 1, 2], 3).is_ok());
        assert!(Permutation::sequence(vec![4], 3).is_err());
    }

    #[test]
    fn permutation_file_round_trip() {
        let perm = Permutation::new(vec![2, 3, 1]).unwrap();
        let text = perm.to_file_string();
        assert_eq!(text, "2\n3\n1\n");
        assert_eq!(Permutation::parse(&text).unwrap(), perm);
    }

    #[test]
    fn random_permutation_singleton() {
        let perm = Permutation::random(1, RngSeed(9));
        assert_eq!(perm.indices(), &[0]);
    }

    #[test]
    fn random_permutation_deterministic() {
        let a = Permutation::random(20, RngSeed(123));
        let b = Permutation::random(20, RngSeed(123));
        assert_eq!(a, b);
        let c = Permutation::random(20, RngSeed(124));
        assert_ne!(a, c);
    }

    #[test]
    fn random_permutation_uniform_over_s3() {
        // 60000 draws over the 6 permutations of n=3; each frequency must be
        // within 0.01 of 1/6.
        let mut counts = std::collections::HashMap::new();
        let draws = 60_000u64;
        for i in 0..draws {
            let p = Permutation::random(3, RngSeed(i));
            *counts.entry(p.indices().to_vec()).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (_, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.01,
                "permutation frequency {freq} too far from 1/6"
            );
        }
    }

    #[test]
    fn shuffle_constant_series_fixed_point() {
        let s = TimeSeries::new(vec![5.0, 5.0, 5.0], "c").unwrap();
        assert_eq!(shuffle_sentences(&s, RngSeed(1)).values, s.values);
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let s = TimeSeries::new((0..50).map(|i| (i % 7) as f64).collect(), "m").unwrap();
        let out = shuffle_sentences(&s, RngSeed(3));
        let mut a = out.values.clone();
        let mut b = s.values.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        assert_eq!(out.len(), s.len());
    }

    #[test]
    fn shuffle_deterministic() {
        let s = TimeSeries::new((0..100).map(|i| i as f64).collect(), "d").unwrap();
        assert_eq!(
            shuffle_sentences(&s, RngSeed(7)).values,
            shuffle_sentences(&s, RngSeed(7)).values
        );
    }

    fn spectrum_amplitudes(values: &[f64]) -> Vec<f64> {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(values.len());
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        buf.iter().map(|c| c.norm()).collect()
    }

    #[test]
    fn surrogate_preserves_amplitude_spectrum() {
        for t in [256usize, 257] {
            let s = TimeSeries::new(
                (0..t).map(|i| ((i * i) % 23) as f64 + (i % 5) as f64).collect(),
                "amp",
            )
            .unwrap();
            let sur = fourier_phase_surrogate(&s, RngSeed(11)).unwrap();
            let a = spectrum_amplitudes(&s.values);
            let b = spectrum_amplitudes(&sur.values);
            let peak = a.iter().cloned().fold(0.0, f64::max);
            for (x, y) in a.iter().zip(&b) {
                assert!(
                    (x - y).abs() / peak < 1e-10,
                    "amplitude deviates: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn surrogate_preserves_mean_and_variance() {
        for t in [64usize, 65] {
            let s = TimeSeries::new((0..t).map(|i| ((i * 13) % 17) as f64).collect(), "mv").unwrap();
            let sur = fourier_phase_surrogate(&s, RngSeed(5)).unwrap();
            assert_eq!(sur.len(), s.len());
            assert!((sur.mean() - s.mean()).abs() < 1e-10);
            assert!((sur.variance() - s.variance()).abs() / s.variance() < 1e-10);
        }
    }

    #[test]
    fn surrogate_deterministic_and_length_checked() {
        let s = TimeSeries::new((0..32).map(|i| (i % 4) as f64).collect(), "s").unwrap();
        let a = fourier_phase_surrogate(&s, RngSeed(2)).unwrap();
        let b = fourier_phase_surrogate(&s, RngSeed(2)).unwrap();
        assert_eq!(a.values, b.values);

        let short = TimeSeries::new(vec![1.0, 2.0, 3.0], "x").unwrap();
        assert!(matches!(
            fourier_phase_surrogate(&short, RngSeed(0)),
            Err(Error::SeriesTooShort { needed: 4, got: 3 })
        ));
    }
}
