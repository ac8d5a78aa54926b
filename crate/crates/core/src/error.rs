use thiserror::Error;

/// Unified error type for graph construction, objective evaluation,
/// parameter validation and simulation runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("reference minimizer did not converge: gradient norm {residual:.3e} after {iters} iterations")]
    NonConvergence { iters: u64, residual: f64 },

    #[error("diagnostic failure at iteration {iteration}: {check} residual {residual:.3e} exceeds {limit:.0e}")]
    Diagnostic {
        iteration: u64,
        check: String,
        residual: f64,
        limit: f64,
    },

    #[error("divergence at iteration {iteration}: {what}")]
    Divergence { iteration: u64, what: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
