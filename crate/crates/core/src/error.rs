use std::path::PathBuf;

/// Errors raised by the imaging pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{function}: argument {value} outside the domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("singular evaluation: points {distance:e} m apart (minimum {minimum:e} m)")]
    Singularity { distance: f64, minimum: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("line {line}: {message} (token `{token}`)")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },

    #[error("unit error: {0}")]
    Unit(String),

    #[error("no receiver within tolerance for transmitters {missing:?} (bistatic angle {alpha_deg} deg)")]
    Coverage { alpha_deg: f64, missing: Vec<usize> },

    #[error("frequency {requested_ghz} GHz not present; available: {available_ghz:?} GHz")]
    FrequencyUnavailable {
        requested_ghz: f64,
        available_ghz: Vec<f64>,
    },

    #[error("config error at `{pointer}`: {message}")]
    Config { pointer: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
