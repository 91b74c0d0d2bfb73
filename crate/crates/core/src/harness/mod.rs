//! Scenario configuration, the outer alternation, Monte-Carlo sweeps and
//! result files.

mod config;
mod output;
mod run;
mod sweep;

pub use config::{dbm_to_watts, watts_to_dbm, Baseline, ScenarioConfig};
pub use output::{emit_csv, read_csv, write_traces, CSV_HEADER};
pub use run::{algorithm2, RunRecord, StartPoint, StopReason};
pub use sweep::{mean_stderr, sweep, Axis, SweepCell, SweepResult, SweepTable};
