use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {bound}")]
    Validation {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical accuracy not reached: {what} (achieved {achieved:.3e})")]
    NumericalAccuracy { what: String, achieved: f64 },
    #[error("quadrature failure at ({i}, {j}): {msg}")]
    Quadrature { i: usize, j: usize, msg: String },
    #[error("grid construction failed: {0}")]
    Grid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("fiber structure violated: {0}")]
    Structure(String),
    #[error("regime unsupported: {0}")]
    Regime(String),
    #[error("under-resolved: {0}")]
    Resolution(String),
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("solver diverged: {0}")]
    Divergence(String),
    #[error("integrator accuracy lost: {0}")]
    IntegratorAccuracy(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
