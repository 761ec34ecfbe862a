use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument fell outside the interval on which a function is defined.
    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("singular point at {what} = {value}")]
    Singularity { what: &'static str, value: f64 },

    #[error("invalid boundary motion at t = {t}: {reason}")]
    InvalidMotion { t: f64, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("seed polynomial is not strictly increasing: stationary point at xi = {xi}")]
    NonMonotoneSeed { xi: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    #[error("backtracing did not reach the seed interval after {0} reflections")]
    NonTermination(usize),

    #[error("preimage {preimage} lies beyond the covered range (ends at {covered})")]
    Extrapolation { preimage: f64, covered: f64 },

    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain { what, value, lo, hi }
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
