//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("input text is empty")]
    EmptyInput,

    #[error("token stream contains no sentence-ending mark")]
    NoSentences,

    #[error("token stream contains no punctuation mark")]
    NoMarks,

    #[error("chapter {0} contains no sentences")]
    EmptyChapter(usize),

    #[error("order has {got} entries for a corpus of {expected} chapters")]
    PermutationSizeMismatch { expected: usize, got: usize },

    #[error("chapter index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("order is not a bijection on 1..={n}")]
    NotABijection { n: usize },

    #[error("series too short: need at least {needed} points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("scale {scale} too small for detrend order {order}: need s > m+1")]
    ScaleTooSmall { scale: usize, order: usize },

    #[error("zero detrended variance in a window{}; raise the minimum scale above the longest constant run",
            .scale.map(|s| format!(" at scale {s}")).unwrap_or_default())]
    DegenerateWindow { scale: Option<usize> },

    #[error("fit range [{lo}, {hi}] selects {selected} scales from the grid; need at least 5")]
    BadFitRange { lo: usize, hi: usize, selected: usize },

    #[error("ensemble degraded: {failed} of {total} members failed")]
    EnsembleDegraded { failed: usize, total: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
