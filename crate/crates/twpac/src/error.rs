//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// A physical parameter violates its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Device or drive configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A network element or formula hits an exact singularity.
    #[error("singularity: {0}")]
    Singular(String),

    /// A numerical procedure failed to converge or produced a non-finite
    /// value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A root finder found no sign change in its scan range.
    #[error("no root: {0}")]
    NoRoot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end: configuration
    /// problems map to 2, numerical failures to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Io(_) => 2,
            Error::Singular(_) | Error::Numerical(_) | Error::NoRoot(_) => 3,
        }
    }
}
