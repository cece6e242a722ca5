use thiserror::Error;

/// Errors surfaced by the PCS library.
#[derive(Debug, Error)]
pub enum PcsError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("duplicate rows {row_a} and {row_b} (1-based, distance <= {tol:e})")]
    DuplicateRows { row_a: usize, row_b: usize, tol: f64 },

    #[error("combinatorial cap exceeded: {0}")]
    CapExceeded(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),
}

impl PcsError {
    /// Stable process exit code for the CLI layer.
    pub fn exit_code(&self) -> i32 {
        match self {
            PcsError::Io { .. } | PcsError::Parse { .. } => 2,
            PcsError::Validation(_) | PcsError::DuplicateRows { .. } => 3,
            PcsError::CapExceeded(_) => 4,
            PcsError::Degenerate(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, PcsError>;
