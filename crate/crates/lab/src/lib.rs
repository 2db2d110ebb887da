//! Sweep orchestration, run files, presets and CSV output for `paoi-core`.

pub mod config;
pub mod csvio;
pub mod error;
pub mod presets;
pub mod sweep;

pub use config::LabConfig;
pub use csvio::{read_rows, write_rows, Row, RowWriter, HEADER};
pub use error::{LabError, Result};
pub use sweep::{run_collect, run_sweep, Engine, MetricKind, RunOptions, SweepOutcome, SweepSpec, SweptParam};
