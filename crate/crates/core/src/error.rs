use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unnormalizable field: every entry is zero")]
    UnnormalizableField,

    #[error("length mismatch: expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("component index {index} out of range (register holds {available})")]
    ComponentOutOfRange { index: usize, available: usize },

    #[error("invalid character {ch:?} in bit pattern {pattern:?}")]
    InvalidPatternChar { pattern: String, ch: char },

    #[error("bit pattern {pattern:?} has {actual} bits, expected {expected}")]
    PatternLength {
        pattern: String,
        expected: usize,
        actual: usize,
    },

    #[error("axis {axis} is not active in a {dim}-dimensional grid")]
    InactiveAxis { axis: usize, dim: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("material speed must be positive and finite, found {value} at grid index {index}")]
    NonPositiveMaterial { index: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid operator request: {0}")]
    InvalidOperator(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("term group {group} is not Hermitian (max |H - H^dagger| = {deviation:e})")]
    NonHermitian { group: usize, deviation: f64 },

    #[error("invalid evolution plan: {0}")]
    InvalidPlan(String),

    #[error("no snapshots inside the integration window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("state carries no normalization record")]
    MissingNormalization,

    #[error("value {value} cannot be reproduced as baseline {baseline} plus a delta")]
    UnrepresentableDelta { baseline: f64, value: f64 },

    #[error("numerical guard: {0}")]
    NumericalGuard(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps the error with a short description of the stage that failed.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by a bad configuration or malformed input.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_)
                | Error::Parse(_)
                | Error::InvalidGrid(_)
                | Error::InvalidPatternChar { .. }
                | Error::PatternLength { .. }
                | Error::InvalidPlan(_)
                | Error::LengthMismatch { .. }
        )
    }

    /// True for guards that protect numerical validity (cost, Hermiticity, norm, CFL).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self.root(),
            Error::CostGuard(_)
                | Error::NonHermitian { .. }
                | Error::NumericalGuard(_)
                | Error::UnnormalizableField
                | Error::NonPositiveMaterial { .. }
                | Error::UnrepresentableDelta { .. }
        )
    }
}
