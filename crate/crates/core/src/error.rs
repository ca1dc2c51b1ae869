use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain {
        what: &'static str,
        detail: alloc::string::String,
    },
    /// A configuration that cannot be evaluated (empty grid, bad ladder...).
    Config(alloc::string::String),
    /// A numeric routine failed to produce a finite answer.
    Numeric(alloc::string::String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<alloc::string::String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, detail } => write!(f, "domain error in {what}: {detail}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
