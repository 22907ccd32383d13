use std::path::PathBuf;

use crate::scene::TargetClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid radar band: {0}")]
    Band(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(&'static str),

    #[error("training set leaves {} (class, sector) cell(s) empty: {}", .0.len(), format_cells(.0))]
    EmptyCell(Vec<(TargetClass, usize)>),

    #[error("training samples mix feature domains")]
    MixedDomain,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("feature domain {0} does not match bank domain {1}")]
    DomainMismatch(&'static str, &'static str),

    #[error("no template bank for the {0} domain")]
    MissingBank(&'static str),

    #[error("confidence is undefined without votes")]
    NoVotes,

    #[error("invalid policy: {field} {message}")]
    Policy { field: &'static str, message: String },

    #[error("invalid template bank: {0}")]
    Bank(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_cells(cells: &[(TargetClass, usize)]) -> String {
    const SHOWN: usize = 8;
    let mut parts: Vec<String> = cells
        .iter()
        .take(SHOWN)
        .map(|(class, sector)| format!("({class}, {sector})"))
        .collect();
    if cells.len() > SHOWN {
        parts.push(format!("... {} more", cells.len() - SHOWN));
    }
    parts.join(", ")
}
