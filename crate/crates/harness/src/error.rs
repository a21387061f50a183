use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },

    #[error("config: {0}")]
    Invalid(String),

    #[error("classifier model not found at {}", .0.display())]
    ModelMissing(PathBuf),

    #[error(transparent)]
    Core(#[from] ringsig::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
