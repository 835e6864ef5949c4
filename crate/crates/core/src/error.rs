use thiserror::Error;

use crate::algebra::Algebra;
use crate::hyers::IterationTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("algebra mismatch: {left} vs {right}")]
    AlgebraMismatch { left: Algebra, right: Algebra },

    #[error("{algebra} expects {expected} coefficients, got {got}")]
    DimensionMismatch {
        algebra: Algebra,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("tabulated control queried at norm sum {0} outside its table")]
    OutOfTable(f64),

    #[error("{method} iteration did not converge within {n_max} steps (last gap {last_gap:e})")]
    NonConvergent {
        method: crate::hyers::Method,
        n_max: usize,
        last_gap: f64,
        trace: Box<IterationTrace>,
    },

    #[error("{method} iteration exceeded magnitude guard {guard:e} at step {step}")]
    Overflow {
        method: crate::hyers::Method,
        step: usize,
        guard: f64,
        trace: Box<IterationTrace>,
    },

    #[error("csv output failed: {0}")]
    Csv(String),

    #[error("probe {index}: {source}")]
    AtProbe {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the limit construction itself (divergent series
    /// or iterates), as opposed to malformed inputs.
    pub fn is_numeric(&self) -> bool {
        if let Error::AtProbe { source, .. } = self {
            return source.is_numeric();
        }
        matches!(
            self,
            Error::Divergent(_)
                | Error::OutOfTable(_)
                | Error::NonConvergent { .. }
                | Error::Overflow { .. }
        )
    }

    pub fn trace(&self) -> Option<&IterationTrace> {
        match self {
            Error::NonConvergent { trace, .. } | Error::Overflow { trace, .. } => Some(trace),
            Error::AtProbe { source, .. } => source.trace(),
            _ => None,
        }
    }

    /// Variant name, for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::AlgebraMismatch { .. } => "AlgebraMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Divergent(_) => "Divergent",
            Error::OutOfTable(_) => "OutOfTable",
            Error::NonConvergent { .. } => "NonConvergent",
            Error::Overflow { .. } => "Overflow",
            Error::Csv(_) => "Csv",
            Error::AtProbe { source, .. } => source.kind(),
        }
    }

    /// Index of the probe that triggered the failure, if known.
    pub fn probe(&self) -> Option<usize> {
        match self {
            Error::AtProbe { index, .. } => Some(*index),
            _ => None,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
