//! Experiment orchestration: sweeps over `eps`, slope fits, CSV/JSON output.

pub mod config;
pub mod fit;
pub mod report;
pub mod sweep;

pub use config::{Mode, SweepConfig};
pub use fit::{fit_slope, SlopeFit};
pub use report::{emit_lab_rows, emit_report, summary_path, write_report};
pub use sweep::{derive_seed, run_sweep, CellSummary, SweepReport, SweepRow};
