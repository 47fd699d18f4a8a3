use std::fmt;

/// Failure classes of a CLI run; each maps to a fixed exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or missing configuration; nothing was computed.
    #[error("{message}")]
    Config { key: Option<String>, message: String },

    /// The computation itself failed (non-convergence, bandwidth overflow...).
    #[error("{0}")]
    Numerical(sfslab_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            key: None,
            message: message.into(),
        }
    }

    pub fn key(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    pub fn io(path: impl fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    /// Single machine-parsable diagnostic line.
    pub fn diagnostic(&self) -> String {
        let msg = self
            .to_string()
            .replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', " ");
        match self {
            CliError::Config { key: Some(k), .. } => format!("error kind=config key={k} message=\"{msg}\""),
            _ => format!("error kind={} message=\"{msg}\"", self.kind()),
        }
    }
}

/// Core errors caused by parameter choices count as configuration errors;
/// the rest are numerical failures.
impl From<sfslab_core::Error> for CliError {
    fn from(e: sfslab_core::Error) -> Self {
        use sfslab_core::Error as E;
        match e {
            E::InvalidParameter { name, .. } => CliError::Config {
                key: Some(name.to_string()),
                message: e.to_string(),
            },
            E::Precondition(_) => CliError::config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
