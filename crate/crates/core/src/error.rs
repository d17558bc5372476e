use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation requested outside the coefficient horizon.
    #[error("time {t} outside [0, {horizon}]")]
    Domain { t: f64, horizon: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Malformed coefficient data or spec parameters.
    #[error("invalid input at {field}: {reason}")]
    Input { field: String, reason: String },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("singular {block} block at t = {t}")]
    Singular { block: &'static str, t: f64 },

    /// `I - K H33` (or `I - K H44`) is too ill-conditioned to solve for the gains.
    #[error("near-singular gain system at t = {t} (condition number {cond:.3e})")]
    NearSingular { t: f64, cond: f64 },

    #[error("numerical failure at t = {t}: {reason}")]
    Numerical { t: f64, reason: String },

    #[error("bracket [{lo}, {hi}] does not straddle the root (values {f_lo}, {f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    #[error("link budget exceeded: index {needed} needs more than {budget} chain links")]
    Budget { needed: usize, budget: usize },

    #[error("gain schedule error: {0}")]
    Schedule(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn input(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Input {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
