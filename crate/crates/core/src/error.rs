use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("too few SNPs: need at least {needed}, got {got}")]
    TooFewSnps { needed: usize, got: usize },
    #[error("no instrument signal")]
    NoInstrumentSignal,
    #[error("weak-instrument denominator collapse (adjusted denominator {value:.6e})")]
    WeakInstrumentDenominator { value: f64 },
    #[error("degenerate regressor variance")]
    DegenerateRegressorVariance,
    #[error("empty selection")]
    EmptySelection,
    #[error("insufficient selected instruments: need at least {needed}, got {got}")]
    InsufficientSelected { needed: usize, got: usize },
    #[error("post-selection denominator collapse (theta2_lambda {value:.6e}, psi_lambda {psi_lambda:.4})")]
    PostSelectionCollapse { value: f64, psi_lambda: f64 },
    #[error("selection probability underflow")]
    SelectionProbabilityUnderflow,
    #[error("degenerate RB variance (bracket {bracket:.6e})")]
    DegenerateRbVariance { bracket: f64 },
    #[error("snp {snp_id}: {source}")]
    AtSnp {
        snp_id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("no common instruments")]
    NoCommonInstruments,
    #[error("empty whitelist")]
    EmptyWhitelist,
    #[error("missing mapped column {column:?} in {path}")]
    MissingColumn { column: String, path: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input {path}: {message}")]
    MalformedInput { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
