use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "bisection bracket failure for {what}: residual has the same sign at both ends \
         [{lo}, {hi}] (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})"
    )]
    Bracket {
        what: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("thermal solver failed at timestep {index}: {source}")]
    Timestep {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("header error: {0}")]
    Header(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("line {line}: timestamp {timestamp} is not after the previous record")]
    Ordering { line: u64, timestamp: String },

    #[error("line {line}: spacing of {found_s} s breaks the {expected_s} s grid")]
    Spacing {
        line: u64,
        expected_s: i64,
        found_s: i64,
    },

    #[error("feature `{0}` is constant over the fitting rows")]
    ConstantFeature(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("model is case {model}, window is case {window}")]
    CaseMismatch { model: u8, window: u8 },

    #[error("tape does not match the parameters or inputs it is used with: {0}")]
    StaleTape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: i64, expected: i64 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerics (solver brackets, non-finite losses)
    /// rather than of the data or arguments.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Bracket { .. } | Error::NonFinite(_) => true,
            Error::Timestep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
