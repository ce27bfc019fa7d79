use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("row {row} is not on the simplex (sum {sum}, min entry {min})")]
    NotOnSimplex { row: usize, sum: f64, min: f64 },

    #[error("row {row} does not sum to zero (sum {sum})")]
    NotTangent { row: usize, sum: f64 },

    #[error("entry ({row}, {col}) leaves the simplex: {value}")]
    OutOfSimplex { row: usize, col: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("balance terms depend on the index choice (spread {spread:e} > {tol:e}); model is not equivariant")]
    IndexInconsistency { spread: f64, tol: f64 },

    #[error("degenerate denominator {denominator} for the {branch} critical value")]
    DegenerateDenominator { branch: &'static str, denominator: f64 },

    #[error("group enumeration exceeded the cap of {cap} elements")]
    GroupTooLarge { cap: usize },

    #[error("|S_{n} x S_{k}| = {order} exceeds the oracle cap of {cap}")]
    SizeExceeded { n: usize, k: usize, order: u128, cap: usize },

    #[error("integration diverged at t = {t}: |z|_inf = {norm}")]
    Diverged { t: f64, norm: f64 },

    #[error("state is zero; no direction to compare")]
    ZeroState,

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dims(na: usize, no: usize) -> String {
    format!("{na}x{no}")
}
