//! Sweep runner for the outage-probability evaluators: configuration and
//! presets, parallel evaluation, cross-checks, and CSV/JSON output.

pub mod config;
pub mod output;
pub mod report;
pub mod sweep;

pub use config::{Evaluator, Overrides, RunConfig, SweepSpec};
pub use output::emit_outputs;
pub use report::{compare_report, ComparisonReport};
pub use sweep::{run, run_sweep, SweepResult};
