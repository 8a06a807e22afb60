use std::fmt;

pub const EXIT_DATA: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// A failure together with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<hdplus_core::Error> for CliError {
    fn from(e: hdplus_core::Error) -> Self {
        let code = if e.is_config() {
            EXIT_CONFIG
        } else {
            EXIT_DATA
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Re-tags an error raised while checking flags or input files as a
/// configuration error.
pub trait IntoConfig<T> {
    fn into_config(self) -> CliResult<T>;
}

impl<T> IntoConfig<T> for hdplus_core::Result<T> {
    fn into_config(self) -> CliResult<T> {
        self.map_err(|e| CliError::config(e.to_string()))
    }
}
