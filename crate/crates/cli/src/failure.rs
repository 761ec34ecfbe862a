use std::fmt;

/// A failed run, classified by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed configuration (exit 2).
    Config(String),
    /// Well-formed but inconsistent scenario (exit 3).
    Validation(String),
    /// The numerics failed (exit 4).
    Numeric(String),
    /// Writing artifacts failed (exit 1).
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Numeric(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    /// Library errors raised while checking a scenario.
    pub fn invalid(e: movbound::Error) -> Self {
        match e {
            movbound::Error::Config(m) => Failure::Config(m),
            movbound::Error::Io(m) => Failure::Io(m),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Validation(m) => write!(f, "invalid scenario: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

/// Library errors raised while running: numeric unless they are I/O.
impl From<movbound::Error> for Failure {
    fn from(e: movbound::Error) -> Self {
        match e {
            movbound::Error::Io(m) => Failure::Io(m),
            movbound::Error::Config(m) => Failure::Config(m),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
