use std::fmt;

/// Harness-level failure classes, mapped onto CLI exit codes: config
/// rejection exits 2, an invariant violation during a run exits 3, and io
/// trouble exits 1.
#[derive(Debug, Clone)]
pub enum RunError {
    Config(String),
    Invariant(String),
    Io(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config rejected: {m}"),
            RunError::Invariant(m) => write!(f, "invariant violation: {m}"),
            RunError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Invariant(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}
