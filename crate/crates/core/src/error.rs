use crate::sim::{ScreenId, TaskId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown task {0}")]
    UnknownTask(TaskId),

    #[error("unknown screen {0}")]
    UnknownScreen(ScreenId),

    #[error("unknown step {step} of task {task}")]
    UnknownStep { task: TaskId, step: usize },

    #[error("malformed action: {0}")]
    MalformedAction(String),

    #[error("task already finished")]
    TaskFinished,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("policy lacks capability: {0}")]
    Capability(String),

    #[error("estimator: {0}")]
    Estimator(String),

    #[error("scenario construction: {0}")]
    Scenario(String),

    #[error("candidate list has {count} entries, limit is {limit}")]
    TooManyCandidates { count: usize, limit: usize },

    #[error("no candidate matches the supervised target")]
    MissingTarget,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
