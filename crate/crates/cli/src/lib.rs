//! Command-line driver: reads a TOML run configuration, runs one of the
//! pipelines of `nehari-core`, and writes a JSON result document, a CSV
//! trajectory and an SVG plot.
//!
//! Exit codes: 0 certified (or check passed), 1 usage/config/I/O error,
//! 2 solver or certification failure, 3 a hypothesis check failed.

pub mod config;
pub mod document;
pub mod emit;
pub mod run;

pub use config::{load_config, Formulation, Mode, Overrides, RunConfig};
pub use document::{ResultDocument, RunStatus};
pub use run::{execute, run, RunOutcome};
