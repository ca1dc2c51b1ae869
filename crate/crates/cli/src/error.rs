use std::fmt;
use std::path::PathBuf;

use crate::config::Diagnostic;

/// Spec syntax error with its 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

#[derive(Debug)]
pub enum CliError {
    Parse(ParseError),
    Invalid(Vec<Diagnostic>),
    Numeric(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 parse, 3 invalid spec, 4 numeric failure,
    /// 1 for I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(e) => write!(f, "parse error at {e}"),
            CliError::Invalid(diags) => {
                write!(f, "invalid spec:")?;
                for d in diags {
                    write!(f, "\n  {d}")?;
                }
                Ok(())
            }
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e)
    }
}

impl From<pilothop_core::Error> for CliError {
    fn from(e: pilothop_core::Error) -> Self {
        use pilothop_core::Error as E;
        match e {
            E::Numeric(msg) => CliError::Numeric(msg),
            E::Domain { what, detail } => CliError::Invalid(vec![Diagnostic {
                fields: vec![what.to_string()],
                message: detail,
            }]),
            E::Config(msg) => CliError::Invalid(vec![Diagnostic {
                fields: vec!["experiment".into()],
                message: msg,
            }]),
        }
    }
}
