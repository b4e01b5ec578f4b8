use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of the operation.
    #[error("{what}: {value} is outside the valid domain ({reason})")]
    Domain {
        what: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Input data violates a structural invariant (ordering, monotonicity, ...).
    #[error("data integrity error in {region}: {reason}")]
    DataIntegrity { region: String, reason: String },

    #[error("{0}")]
    Ingest(IngestReport),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("explanation error: {0}")]
    Explanation(String),

    #[error("malformed model file (line {line}): {reason}")]
    ModelFormat { line: usize, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// One offending input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub file: PathBuf,
    /// 1-based line number; 0 when the issue concerns the file as a whole.
    pub line: usize,
    pub reason: String,
}

/// Every problem found while reading the input files, not just the first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub issues: Vec<LineIssue>,
}

impl IngestReport {
    pub fn push(&mut self, file: impl Into<PathBuf>, line: usize, reason: impl Into<String>) {
        self.issues.push(LineIssue {
            file: file.into(),
            line,
            reason: reason.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ingestion failed with {} issue(s)", self.issues.len())?;
        for issue in &self.issues {
            if issue.line == 0 {
                write!(f, "\n  {}: {}", issue.file.display(), issue.reason)?;
            } else {
                write!(
                    f,
                    "\n  {}:{}: {}",
                    issue.file.display(),
                    issue.line,
                    issue.reason
                )?;
            }
        }
        Ok(())
    }
}
