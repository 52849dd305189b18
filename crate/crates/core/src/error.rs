use thiserror::Error;

/// Errors produced by the propagation, analysis and oracle layers.
#[derive(Debug, Error)]
pub enum ZevcaError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid jet: {0}")]
    InvalidJet(String),

    #[error("singular jet: {0}")]
    SingularJet(String),

    #[error("wrong time mode: {0}")]
    Mode(String),

    #[error("setup error: {0}")]
    Setup(String),

    #[error("step size underflow after repeated rejections; last accepted time {last_time}")]
    StepRejection { last_time: f64 },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("configuration error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ZevcaError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        ZevcaError::Argument(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        ZevcaError::Config {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ZevcaError>;
