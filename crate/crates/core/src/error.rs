use thiserror::Error;

/// Errors raised by the exponent calculators, the simulator and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("zero marginal probability for y = {symbol}")]
    ZeroMarginal { symbol: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible mean rate {0} (must be > 0)")]
    InfeasibleRate(f64),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("degenerate data at n = {n}: zero events in {trials} trials (one-sided exponent bound >= {one_sided_bound})")]
    DegenerateData {
        n: usize,
        trials: u64,
        one_sided_bound: f64,
    },

    #[error("schema mismatch in {file}: {detail}")]
    SchemaMismatch { file: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
