use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{field}: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] dotreg::Error),

    #[error("solver failed after {iterations} iterations: {error}")]
    Solver { iterations: usize, error: dotreg::Error },
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn artifact(path: &Path, reason: impl Into<String>) -> Self {
        Self::Artifact {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Config { .. } => "config",
            Self::Io { .. } => "io",
            Self::Artifact { .. } => "artifact",
            Self::Core(_) => "core",
            Self::Solver { .. } => "solver",
        }
    }

    /// 1 for bad invocations or configs, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config { .. } => 1,
            _ => 2,
        }
    }

    /// One-line JSON error record.
    pub fn to_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
