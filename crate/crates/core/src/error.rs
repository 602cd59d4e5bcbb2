use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A coordinate that should sit on the Brownian grid does not.
    #[error("precision error: t = {t} is not a node of the path grid (step {step})")]
    OffGrid { t: f64, step: f64 },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("assembly error: non-finite {what} at (x={x}, y={y}, s={s}, t={t})")]
    Assembly {
        what: &'static str,
        x: f64,
        y: f64,
        s: f64,
        t: f64,
    },

    #[error("singular system (pivot {pivot:e} at column {column}, threshold {threshold:e}){}", .origin.map(|(seed, idx)| format!(" for seed {seed}, path {idx}")).unwrap_or_default())]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
        /// `(seed, path_index)` of the path that produced the system, if any.
        origin: Option<(u64, usize)>,
    },

    #[error("residual {residual:e} exceeds {bound:e} after refinement")]
    Residual { residual: f64, bound: f64 },

    #[error("ensemble error: all {0} paths failed")]
    Ensemble(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
