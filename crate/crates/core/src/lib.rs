//! Convert chapterized texts into punctuation-interval time series and
//! quantify their structure: discrete-Weibull fits to the interval
//! histograms, autocorrelation with a significance band, and multifractal
//! detrended fluctuation analysis with chapter-permutation and
//! surrogate-data experiments.

pub mod acf;
pub mod error;
pub mod experiments;
pub mod ingest;
pub mod mfdfa;
pub mod series;
pub mod synth;
pub mod weibull;

pub use error::{Error, Result};
pub use series::{RngSeed, TimeSeries};
