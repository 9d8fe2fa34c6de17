use thiserror::Error;

use crate::geometry::Address;

/// Errors raised by the toolkit. Each variant maps onto one CLI exit class.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkinError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("singular system: floating substructure containing voxels {voxels:?}")]
    Singular { voxels: Vec<Address> },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl SkinError {
    pub fn validation(msg: impl Into<String>) -> Self {
        SkinError::Validation(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        SkinError::Infeasible(msg.into())
    }

    /// Short machine-readable kind tag, used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            SkinError::Validation(_) => "validation",
            SkinError::Infeasible(_) => "infeasible",
            SkinError::Singular { .. } => "singular",
            SkinError::OutOfRange(_) => "out_of_range",
            SkinError::Io(_) => "io",
        }
    }

    /// Process exit code: 2 validation, 3 infeasible, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            SkinError::Validation(_) | SkinError::OutOfRange(_) => 2,
            SkinError::Infeasible(_) | SkinError::Singular { .. } => 3,
            SkinError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for SkinError {
    fn from(e: std::io::Error) -> Self {
        SkinError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for SkinError {
    fn from(e: serde_json::Error) -> Self {
        SkinError::Validation(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, SkinError>;
