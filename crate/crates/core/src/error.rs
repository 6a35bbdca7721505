use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("argument {0} is negative; functions are defined on [0, inf)")]
    NegativeArgument(f64),

    #[error("function is unbounded (linear extension with slope {0}); a BL norm needs a bounded function")]
    Unbounded(f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model ingredients violate assumptions: {0}")]
    Assumptions(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("oracle grid of {nodes} nodes exceeds the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("particle count {count} exceeds the cap of {cap}")]
    ParticleCap { count: usize, cap: usize },

    #[error("contraction margin kappa is absent (need b' <= 0 and c >= |c'| + kappa with kappa > 0)")]
    KappaAbsent,

    #[error("no sign change on [{low}, {high}]: F(low) = {f_low}, F(high) = {f_high}")]
    NoSignChange {
        low: f64,
        high: f64,
        f_low: f64,
        f_high: f64,
    },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("checkpoint grids do not match: {0}")]
    MismatchedCheckpoints(String),
}

impl Error {
    /// True for failures of a computation, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LinearProgram(_)
                | Error::Numerical(_)
                | Error::ParticleCap { .. }
                | Error::NoSignChange { .. }
                | Error::NonConvergence { .. }
                | Error::GridTooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
