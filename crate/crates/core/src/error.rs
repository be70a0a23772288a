use num_complex::Complex64;

use crate::reducers::IterationTrace;
use crate::system::ReducedModel;

pub type Result<T> = std::result::Result<T, MorError>;

#[derive(Debug, thiserror::Error)]
pub enum MorError {
    #[error("shift {shift} is numerically an eigenvalue of the state matrix (pivot {pivot:.3e})")]
    SingularShift { shift: Complex64, pivot: f64 },

    #[error("matrix exponential would overflow ({detail})")]
    OverflowRisk { detail: String },

    #[error("matrix is not diagonalizable to working accuracy (eigenvector condition {condition:.3e})")]
    NonDiagonalizable { condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("shift real part {real_part:.3e} is too close to zero")]
    DegenerateShift { real_part: f64 },

    #[error("projection basis collapsed: retained rank {retained} of {required}")]
    RankCollapse { retained: usize, required: usize },

    #[error("W^T V is ill-conditioned (condition {condition:.3e})")]
    IllConditionedProjection { condition: f64 },

    #[error("no convergence after {} iterations", trace.records.len())]
    NoConvergence {
        trace: Box<IterationTrace>,
        best: Box<ReducedModel>,
    },

    #[error("iteration {iteration} failed: {source}")]
    IterationFailed {
        iteration: usize,
        #[source]
        source: Box<MorError>,
        trace: Box<IterationTrace>,
        best: Option<Box<ReducedModel>>,
    },

    #[error("Sylvester column {column} is singular at shift {shift}")]
    SylvesterFailure { column: usize, shift: Complex64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid interpolation data: {0}")]
    InvalidInterpolation(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

// `std::io::Error` is not `Clone`; it is rebuilt from its kind and message.
impl Clone for MorError {
    fn clone(&self) -> Self {
        use MorError::*;
        match self {
            SingularShift { shift, pivot } => SingularShift {
                shift: *shift,
                pivot: *pivot,
            },
            OverflowRisk { detail } => OverflowRisk {
                detail: detail.clone(),
            },
            NonDiagonalizable { condition } => NonDiagonalizable {
                condition: *condition,
            },
            DimensionMismatch(s) => DimensionMismatch(s.clone()),
            NonFinite(s) => NonFinite(s.clone()),
            DegenerateShift { real_part } => DegenerateShift {
                real_part: *real_part,
            },
            RankCollapse { retained, required } => RankCollapse {
                retained: *retained,
                required: *required,
            },
            IllConditionedProjection { condition } => IllConditionedProjection {
                condition: *condition,
            },
            NoConvergence { trace, best } => NoConvergence {
                trace: trace.clone(),
                best: best.clone(),
            },
            IterationFailed {
                iteration,
                source,
                trace,
                best,
            } => IterationFailed {
                iteration: *iteration,
                source: source.clone(),
                trace: trace.clone(),
                best: best.clone(),
            },
            SylvesterFailure { column, shift } => SylvesterFailure {
                column: *column,
                shift: *shift,
            },
            InvalidConfig(s) => InvalidConfig(s.clone()),
            InvalidInterpolation(s) => InvalidInterpolation(s.clone()),
            Parse {
                path,
                line,
                column,
                message,
            } => Parse {
                path: path.clone(),
                line: *line,
                column: *column,
                message: message.clone(),
            },
            Io { path, source } => Io {
                path: path.clone(),
                source: std::io::Error::new(source.kind(), source.to_string()),
            },
            Serialization(s) => Serialization(s.clone()),
        }
    }
}

impl MorError {
    /// Best-so-far reduced model carried by driver failures, if any.
    pub fn best_model(&self) -> Option<&ReducedModel> {
        match self {
            MorError::NoConvergence { best, .. } => Some(best),
            MorError::IterationFailed { best, .. } => best.as_deref(),
            _ => None,
        }
    }

    pub fn trace(&self) -> Option<&IterationTrace> {
        match self {
            MorError::NoConvergence { trace, .. } | MorError::IterationFailed { trace, .. } => {
                Some(trace)
            }
            _ => None,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        MorError::Io {
            path: path.into(),
            source,
        }
    }
}
