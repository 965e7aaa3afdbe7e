use std::time::Duration;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("duplicate object name `{0}`")]
    DuplicateObject(String),

    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),

    #[error("negated attribute name `{0}` collides with an existing attribute")]
    NameCollision(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid context shape: {0}")]
    Shape(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(
        "canonical base computation exceeded its budget of {budget:?} \
         after {pseudo_intents} pseudo-intents"
    )]
    BudgetExceeded {
        budget: Duration,
        pseudo_intents: usize,
    },

    #[error("unknown question `{0}`")]
    UnknownQuestion(String),

    #[error("question `{0}` has already been answered")]
    AlreadyAnswered(String),

    #[error("session is {actual}, expected {expected}")]
    WrongState {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("session exceeded the round cap of {0}; the answers keep undoing each other")]
    RoundCap(usize),

    #[error("malformed session log: {0}")]
    Log(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
