use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} failed: {message}")]
    Numerical { stage: String, message: String },
    #[error("{stage}: i/o error: {source}")]
    Io {
        stage: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn numerical(stage: impl Into<String>, err: impl std::fmt::Display) -> Self {
        CliError::Numerical {
            stage: stage.into(),
            message: err.to_string(),
        }
    }

    pub fn io(stage: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            stage: stage.into(),
            source,
        }
    }
}
