use thiserror::Error;

/// Errors raised by the finite-sections library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("context mismatch: {0}")]
    ContextMismatch(String),

    #[error("element {element} not reached within word-length radius {cap}")]
    NotGenerated { element: String, cap: usize },

    #[error("radius {requested} exceeds the configured radius cap {cap}")]
    RadiusCap { requested: usize, cap: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("coefficient evaluation failed at {0}")]
    Evaluation(String),

    #[error("ambient window too small: {0}")]
    AmbientWindow(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    Numeric { row: usize, col: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("geodesic condition violated at index {index}: word length {length}")]
    GeodesicViolation { index: usize, length: usize },

    #[error("path of length {length} is too short for window radius {radius} (need {needed})")]
    InsufficientHorizon { length: usize, radius: usize, needed: usize },

    #[error("certificates require ball sections Y_n = Omega_n")]
    UnsupportedSections,

    #[error("exponent decomposition unavailable: {0}")]
    Decomposition(String),

    #[error("prefix stabilization ran out of survivors at position {position}")]
    StabilizationHorizon { position: usize },

    #[error("pool exhausted after {examined} candidates while placing block {block}")]
    PoolExhausted { block: usize, examined: usize },

    #[error("blocks straddle the window boundary: {0:?}")]
    WindowClip(Vec<usize>),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
