use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numerical method stopped before reaching its tolerance.
    #[error("{what} did not converge (best estimate {best_estimate:e}, error estimate {error_estimate:e})")]
    Convergence {
        what: &'static str,
        best_estimate: f64,
        error_estimate: f64,
    },

    #[error("root is not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// The requested level cannot be reached without a randomized test,
    /// because of the point mass of the statistic at zero.
    #[error("level {alpha} is infeasible: the largest attainable non-randomized level is {max_level}")]
    InfeasibleLevel { alpha: f64, max_level: f64 },

    #[error("model error: {0}")]
    Model(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
