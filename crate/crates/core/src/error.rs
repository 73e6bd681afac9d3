use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("degree of point {index} is {degree:e}, below the underflow floor")]
    SingularDegree { index: usize, degree: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("schedule window is empty at n = {n}; smallest feasible n is {min_feasible_n}")]
    ScheduleInfeasible { n: usize, min_feasible_n: usize },

    #[error("level set estimate is empty")]
    EmptyLevelSet,

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for outcomes that are mathematically valid but degenerate
    /// (empty level set, infeasible schedule, degree underflow).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::EmptyLevelSet | Error::ScheduleInfeasible { .. } | Error::SingularDegree { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
