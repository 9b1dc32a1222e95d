use patway_core::checkpoint::CheckpointError;
use patway_core::evalharness::EvalError;
use patway_core::eventlog::EventLogError;
use patway_core::interactions::InteractionError;
use patway_core::interpret::InterpretError;
use patway_core::nncore::NnError;
use patway_core::simgen::SimError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    EventLog(#[from] EventLogError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Model(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Interpret(#[from] InterpretError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One-line error report written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorLine<'a> {
    pub error: &'a str,
    pub message: String,
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Stable machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::EventLog(_) => "event_log",
            CliError::Simulation(_) => "simulation",
            CliError::Model(_) => "model",
            CliError::Checkpoint(CheckpointError::SchemaMismatch { .. }) => "schema_mismatch",
            CliError::Checkpoint(_) => "checkpoint",
            CliError::Interaction(_) => "interaction_search",
            CliError::Interpret(InterpretError::UnknownPathway(_)) => "unknown_pathway",
            CliError::Interpret(InterpretError::SchemaMismatch { .. }) => "schema_mismatch",
            CliError::Interpret(_) => "interpretation",
            CliError::Evaluation(_) => "evaluation",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "json",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(&ErrorLine {
            error: self.kind(),
            message: self.to_string().replace('\n', " "),
        })
        .expect("error line serializes")
    }
}
