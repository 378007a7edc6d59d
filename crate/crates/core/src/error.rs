use thiserror::Error;

/// Errors raised by measure construction, verification and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature failed to reach {target:e} relative accuracy on [{lo}, {hi}] (estimate {estimate}, error {error:e})")]
    QuadratureFailure {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        target: f64,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid integrated survival curve: {0}")]
    InvalidIsf(String),

    #[error("measure is not centered (mean {mean})")]
    NotCentered { mean: f64 },

    #[error("family mean is not constant: mean {first} at t={t_first} but {other} at t={t_other}")]
    NonConstantMean {
        t_first: f64,
        first: f64,
        t_other: f64,
        other: f64,
    },

    #[error("adjacent-minor scan requires strictly positive entries; found zero at ({row}, {col})")]
    ModeInvalid { row: usize, col: usize },

    #[error("density support is not an interval (gap after index {0})")]
    NonIntervalSupport(usize),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("hypothesis {which} violated: {detail}")]
    HypothesisViolated { which: Hypothesis, detail: String },

    #[error("normalising scale h({lambda}) vanishes")]
    DegenerateScale { lambda: f64 },

    #[error("martingale bin {bin} holds only {count} paths (need at least {min})")]
    InsufficientPaths { bin: usize, count: usize, min: usize },

    #[error("time {0} is not part of the embedding report")]
    UnknownTime(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Which of the structural hypotheses on a monotone transformation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    Centering,
    Integrability,
    Concavity,
    LogConcaveSurvival,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Hypothesis::H1 => "H1",
            Hypothesis::H2 => "H2",
            Hypothesis::H3 => "H3",
            Hypothesis::Centering => "centering",
            Hypothesis::Integrability => "integrability",
            Hypothesis::Concavity => "concavity",
            Hypothesis::LogConcaveSurvival => "log-concave survival",
        };
        f.write_str(s)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
