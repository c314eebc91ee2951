use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is missing or invalid; `path` is the dotted key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Adaptive quadrature (or another iterative routine) failed to converge.
    #[error("numerical failure{}: {message} (achieved error estimate {achieved:e})", coord_suffix(.coordinate))]
    Numerical {
        message: String,
        achieved: f64,
        coordinate: Option<usize>,
    },

    #[error("schema error: missing column `{0}`")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

fn coord_suffix(c: &Option<usize>) -> String {
    match c {
        Some(i) => format!(" at coordinate {i}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Attach a coordinate index to a numerical failure; other variants pass through.
    pub fn at_coordinate(self, index: usize) -> Self {
        match self {
            Error::Numerical {
                message, achieved, ..
            } => Error::Numerical {
                message,
                achieved,
                coordinate: Some(index),
            },
            other => other,
        }
    }

    /// Prefix numerical and domain failures with where they happened.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Numerical {
                message,
                achieved,
                coordinate,
            } => Error::Numerical {
                message: format!("{ctx}: {message}"),
                achieved,
                coordinate,
            },
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            other => other,
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
