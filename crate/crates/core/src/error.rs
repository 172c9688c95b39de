//! Crate-wide error type.

use thiserror::Error;

/// Errors fall into three groups: validation problems (`InvalidSpec`,
/// `OutOfRange`, `Config`), numerical failures (`Numerical`, `Excitation`)
/// and data problems (`Io`, `Parse`). The CLI maps each group to a distinct
/// exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidSpec(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient excitation: {0}")]
    Excitation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed data: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
