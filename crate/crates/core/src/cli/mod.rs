//! Configuration-driven experiment runner behind the `signorini-lab` binary.

pub mod config;
pub mod pipeline;
pub mod snapshot;

pub use config::ExperimentConfig;
pub use pipeline::{run, Stages, Summary};
