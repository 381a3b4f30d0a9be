use std::path::Path;

use cascade_core::Error as CoreError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ACCEPTANCE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DESIGN: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("acceptance failure: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Field { .. } | CliError::Io { .. } => EXIT_INPUT,
            CliError::Acceptance(_) => EXIT_ACCEPTANCE,
            CliError::Core(e) => match e {
                CoreError::Dimension { .. } | CoreError::Input(_) | CoreError::Config(_) => EXIT_INPUT,
                CoreError::NoConvergence { .. }
                | CoreError::Numerical(_)
                | CoreError::Unsolvable { .. }
                | CoreError::SpectralOverlap { .. }
                | CoreError::Design(_) => EXIT_DESIGN,
            },
        }
    }
}
