use std::path::PathBuf;

use fracindex::FractalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Fractal(#[from] FractalError),

    #[error("configuration: {0}")]
    Config(String),

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Fractal(FractalError::Io(_)) => EXIT_IO,
            CliError::Fractal(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Fractal(_) | CliError::Config(_) | CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Read { .. } | CliError::Write { .. } => EXIT_IO,
        }
    }
}
