//! Simulation harness around `soccer-core`: run configuration files, the
//! closed-loop episode runner, CSV traces, per-run reports, the offline
//! trace verifier and SVG rendering.

pub mod challenge;
pub mod config;
pub mod harness;
pub mod report;
pub mod svg;
pub mod trace;
pub mod trials;
pub mod verify;

pub use config::RunConfig;
pub use harness::{run, HarnessError, RunOutput};
pub use report::RunReport;
