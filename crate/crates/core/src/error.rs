use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("estimate has zero norm")]
    ZeroNormEstimate,

    #[error("window inadmissible at lag {ell}: spectrum bin {bin} vanishes (relative magnitude {relative:.3e})")]
    InadmissibleWindow { ell: usize, bin: usize, relative: f64 },

    #[error("2D window inadmissible at lag ({}, {}): spectrum bin ({}, {}) vanishes", ell.0, ell.1, bin.0, bin.1)]
    InadmissibleWindow2d { ell: (usize, usize), bin: (usize, usize) },

    #[error("signal vanishes at index {index}; the phase recursion cannot continue")]
    VanishingSignal { index: usize },

    #[error("signal vanishes at index ({}, {}); the phase recursion cannot continue", index.0, index.1)]
    VanishingSignal2d { index: (usize, usize) },

    #[error("estimated squared magnitude at index {index} is negative ({value:.3e})")]
    NegativeMagnitude { index: usize, value: f64 },

    #[error("largest eigenvalue {eigenvalue:.3e} is not positive: no rank-one component")]
    NoRankOneComponent { eigenvalue: f64 },

    #[error("lag set is empty")]
    EmptyLagSet,

    #[error("lifted matrix of side {side} is too large to materialize")]
    LiftTooLarge { side: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's inputs violating an algorithm's
    /// preconditions, as opposed to I/O or internal failures.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_))
    }
}
