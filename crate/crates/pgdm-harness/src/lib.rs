//! Experiment harness for the projected-diffusion core: configuration,
//! dataset generation, checkpoints, artifact files, plots, and the
//! experiment drivers behind the `pgdm` command-line interface.

pub mod artifacts;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod plot;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Stage, StageExt};
pub use experiments::RunSummary;
