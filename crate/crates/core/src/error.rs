use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown frame `{0}`")]
    UnknownFrame(String),

    #[error("time {t} s is outside the horizon of frame `{frame}`")]
    Horizon { frame: String, t: f64 },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown action label `{0}` in interval")]
    UnknownActionLabel(String),

    #[error("incomplete trace: atom `{atom}` has no value at t = {t}")]
    IncompleteTrace { atom: String, t: f64 },

    #[error("grounding failed in action `{action}`: {message}")]
    Grounding { action: String, message: String },

    #[error("unknown skill `{0}`")]
    UnknownSkill(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("planning budget of {0} expansions exceeded")]
    PlanningBudget(usize),

    #[error("session error: {0}")]
    Session(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("document error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for exit codes and API error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Infeasible,
    Runtime,
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation(_)
            | Error::UnknownFrame(_)
            | Error::Syntax { .. }
            | Error::UnknownActionLabel(_)
            | Error::UnknownSkill(_)
            | Error::Json(_) => ErrorClass::Validation,
            Error::Infeasible(_) => ErrorClass::Infeasible,
            _ => ErrorClass::Runtime,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::UnknownFrame(_) => "unknown_frame",
            Error::Horizon { .. } => "horizon",
            Error::Syntax { .. } => "syntax",
            Error::UnknownActionLabel(_) => "unknown_action_label",
            Error::IncompleteTrace { .. } => "incomplete_trace",
            Error::Grounding { .. } => "grounding",
            Error::UnknownSkill(_) => "unknown_skill",
            Error::Infeasible(_) => "infeasible",
            Error::PlanningBudget(_) => "planning_budget",
            Error::Session(_) => "session",
            Error::Io(_) => "io",
            Error::Json(_) => "document",
        }
    }
}
