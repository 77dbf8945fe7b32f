//! Stage-tagged harness errors.
//!
//! Every failure names the pipeline stage it came from, so the CLI can
//! print `[stage] cause` diagnostics and exit nonzero.

use std::fmt;

/// Pipeline stage a failure belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    GenData,
    Train,
    Sample,
    Eval,
    Theory,
    Sweep,
    Plot,
    Io,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::GenData => "gen-data",
            Stage::Train => "train",
            Stage::Sample => "sample",
            Stage::Eval => "eval",
            Stage::Theory => "theory",
            Stage::Sweep => "sweep",
            Stage::Plot => "plot",
            Stage::Io => "io",
        }
    }
}

/// A failure with the stage it happened in and a human-readable cause.
#[derive(Debug, Clone, thiserror::Error)]
#[error("[{}] {message}", stage.name())]
pub struct HarnessError {
    pub stage: Stage,
    pub message: String,
}

impl HarnessError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        Self {
            stage,
            message: message.into(),
        }
    }
}

/// Attaches a stage to any displayable error.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, HarnessError>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, HarnessError> {
        self.map_err(|e| HarnessError::new(stage, e.to_string()))
    }
}
