//! Configuration, initial data, persistence and run orchestration.

pub mod config;
pub mod initial;
mod run;
pub mod snapshot;

pub use config::{load_config, load_config_with, parse_config, Mode, RunConfig};
pub use initial::{generate_initial, InitialSpec};
pub use run::{
    csv_line, error_exit_code, fmt_real, report_csv, run, RunStatus, RunSummary, SIMULATE_COLUMNS,
};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotMeta};
