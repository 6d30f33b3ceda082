use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] stftpr::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A window failed the spectrum test for an algorithm's lag set; the
    /// payload is a readable report.
    #[error("inadmissible window: {0}")]
    Inadmissible(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// 2 for bad input or failed preconditions, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) if e.is_precondition() => 2,
            HarnessError::Config(_) | HarnessError::Inadmissible(_) => 2,
            _ => 1,
        }
    }

    /// True when stdout was closed early, as with `stftpr ... | head`.
    pub fn is_broken_pipe(&self) -> bool {
        let io = match self {
            HarnessError::Io(e) | HarnessError::Core(stftpr::Error::Io(e)) => Some(e),
            HarnessError::Json(e) => return e.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe),
            HarnessError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            },
            _ => None,
        };
        io.is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
