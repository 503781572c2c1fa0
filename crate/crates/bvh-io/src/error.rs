use thiserror::Error;

#[derive(Debug, Error)]
pub enum BvhError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unsupported channel {name:?} at line {line}")]
    UnsupportedChannel { line: usize, name: String },
    #[error(transparent)]
    Motion(#[from] motion_core::MotionError),
}

impl BvhError {
    pub(crate) fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        BvhError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }
}
