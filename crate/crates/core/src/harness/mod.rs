//! JSON-configured experiments: config parsing and validation, mode
//! dispatch and CSV/JSON emission.

pub mod config;
pub mod modes;
pub mod output;

pub use config::{ExperimentConfig, Mode};
pub use modes::{run, RunOptions, RunOutcome};
pub use output::{Check, Summary};
