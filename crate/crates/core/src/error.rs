use thiserror::Error;

/// Errors raised anywhere in the analysis chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("level classification failed: {0}")]
    Classification(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("level tracking failed: {0}")]
    Tracking(String),

    #[error("fit did not converge: {0}")]
    Fit(String),

    #[error("fitted amplitude {amplitude} is consistent with zero (sigma {sigma})")]
    LowSignal { amplitude: f64, sigma: f64 },

    #[error("singular design matrix: {0}")]
    Singular(String),

    #[error("outside linearization range: {0}")]
    Extrapolation(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{origin}:{line}: {msg}")]
    Parse {
        origin: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(origin: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// True for problems with configuration files or flags, as opposed to
    /// problems found while processing the data itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Reads a whole text file, tagging I/O failures with the path.
pub fn read_text(path: impl AsRef<std::path::Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
