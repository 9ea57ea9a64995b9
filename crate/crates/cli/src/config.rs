//! Run configuration: a TOML file overridden by CLI flags, hashed so every
//! output file records exactly what produced it.

use std::path::Path;

use anyhow::{bail, Context, Result};
use interpunct::ingest::{CountUnit, IngestConfig};
use interpunct::mfdfa::{log_spaced_scales, q_range, MfdfaConfig};
use interpunct::TimeSeries;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a run depends on besides the input bytes and the command line
/// outputs directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // Tokenization.
    pub sentence_end_marks: String,
    pub intra_marks: String,
    pub chapter_delimiter: Option<String>,
    pub count_unit: CountUnit,
    // Detrended fluctuation analysis.
    pub detrend_order: usize,
    pub q_max: f64,
    pub q_step: f64,
    pub n_scales: usize,
    pub scale_min: Option<usize>,
    pub scale_max: Option<usize>,
    pub fit_min: Option<usize>,
    pub fit_max: Option<usize>,
    // Autocorrelation.
    pub max_lag: Option<usize>,
    // Execution.
    pub seed: u64,
    /// 0 means use every available core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ingest = IngestConfig::default();
        Self {
            sentence_end_marks: ingest.sentence_end_marks,
            intra_marks: ingest.intra_marks,
            chapter_delimiter: None,
            count_unit: CountUnit::Words,
            detrend_order: 2,
            q_max: 7.0,
            q_step: 0.25,
            n_scales: 50,
            scale_min: None,
            scale_max: None,
            fit_min: None,
            fit_max: None,
            max_lag: None,
            seed: 0,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }

    /// Hex digest of the serialized config; embedded in every output file.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn ingest_config(&self) -> IngestConfig {
        IngestConfig {
            sentence_end_marks: self.sentence_end_marks.clone(),
            intra_marks: self.intra_marks.clone(),
            chapter_delimiter: self.chapter_delimiter.clone(),
            count_unit: self.count_unit,
        }
    }

    /// Build the analysis grid for a concrete series, applying any
    /// scale/fit overrides on top of the data-driven defaults.
    pub fn mfdfa_config(&self, series: &TimeSeries) -> Result<MfdfaConfig> {
        let mut cfg = MfdfaConfig::with_order(series, self.detrend_order)
            .map_err(|e| anyhow::anyhow!("building analysis config: {e}"))?;
        cfg.q_grid = q_range(self.q_max, self.q_step);
        if self.scale_min.is_some() || self.scale_max.is_some() {
            let lo = self.scale_min.unwrap_or(cfg.scale_grid[0]);
            let hi = self.scale_max.unwrap_or(*cfg.scale_grid.last().unwrap());
            if lo >= hi {
                bail!("scale range {lo}..{hi} is empty");
            }
            cfg.scale_grid = log_spaced_scales(lo, hi, self.n_scales);
            cfg.fit_range = (lo, hi);
        }
        if let Some(lo) = self.fit_min {
            cfg.fit_range.0 = lo;
        }
        if let Some(hi) = self.fit_max {
            cfg.fit_range.1 = hi;
        }
        cfg.validate(series.len())
            .map_err(|e| anyhow::anyhow!("analysis config invalid for this series: {e}"))?;
        Ok(cfg)
    }

    pub fn acf_max_lag(&self, series_len: usize) -> usize {
        self.max_lag.unwrap_or_else(|| 1000.min((series_len - 1) / 2))
    }
}
