use std::fmt;
use std::path::PathBuf;

use herdnav_core::Error as CoreError;

/// Row-level problems in a delimiter-separated input file. Line numbers are 1-based file
/// lines (the header is line 1).
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: cannot parse `{column}` from {value:?}")]
    Field {
        line: u64,
        column: String,
        value: String,
    },
    #[error("timestamps not strictly increasing at line(s) {}", join_lines(.lines))]
    Ordering { lines: Vec<u64> },
    #[error("line {line}: duplicate (frame {frame}, track {track_id})")]
    Duplicate {
        line: u64,
        frame: u64,
        track_id: u32,
    },
    #[error("line {line}: invalid bounding box")]
    InvalidBox { line: u64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_lines(lines: &[u64]) -> String {
    lines
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Config,
    Data,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage | ErrorKind::Config => 1,
            ErrorKind::Data => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Invalid(#[from] CoreError),
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Usage(_) => ErrorKind::Usage,
            Error::ConfigFile { .. } | Error::Config(_) => ErrorKind::Config,
            Error::Invalid(CoreError::InvalidConfig { .. }) => ErrorKind::Config,
            Error::Invalid(_) | Error::Parse { .. } | Error::Data(_) | Error::Io { .. } => {
                ErrorKind::Data
            }
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// One machine-parseable error line: `error kind=<kind> [mission=<name>] msg=<message>`.
pub struct ErrorLine<'a> {
    pub error: &'a Error,
    pub mission: Option<&'a str>,
}

impl fmt::Display for ErrorLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error kind={}", self.error.kind().as_str())?;
        if let Some(m) = self.mission {
            write!(f, " mission={m}")?;
        }
        let msg = self.error.to_string().replace('\n', " ");
        write!(f, " msg={msg}")
    }
}
