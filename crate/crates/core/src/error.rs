use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("pole in {context}: {detail}")]
    Pole { context: String, detail: String },

    #[error("resonance at solution k={k}, order l={l} cannot be resolved: {detail}")]
    ResonanceUnresolvable { k: usize, l: usize, detail: String },

    #[error("singular triangular solve at row {row}, order {l}")]
    SingularSolve { row: usize, l: usize },

    #[error("series tail {tail:e} exceeds tolerance {tol:e} at x={x} (L={order})")]
    TailTooLarge { x: f64, order: usize, tail: f64, tol: f64 },

    #[error("alpha={alpha} sits on a window boundary between exponents; use the log-case asymptotic")]
    WindowBoundary { alpha: f64 },

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("quadrature stalled: estimate {estimate:e} above tolerance {tol:e} after {levels} levels")]
    SlowConvergence { estimate: f64, tol: f64, levels: usize },

    #[error("root finder did not converge: {0}")]
    ConvergenceFailure(String),
}

impl Error {
    /// Stable name used by the CLI when reporting numerical failures.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::Pole { .. } => "PoleError",
            Error::ResonanceUnresolvable { .. } => "ResonanceUnresolvable",
            Error::SingularSolve { .. } => "SingularSolve",
            Error::TailTooLarge { .. } => "TailTooLarge",
            Error::WindowBoundary { .. } => "WindowBoundary",
            Error::IllConditioned(_) => "IllConditioned",
            Error::SlowConvergence { .. } => "SlowConvergence",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
        }
    }

    /// True for errors caused by bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParams(_))
    }

    pub(crate) fn pole(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Pole { context: context.into(), detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
