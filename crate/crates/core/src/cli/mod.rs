//! Batch driver behind the `fracanalog` binary.

pub mod config;
pub mod pipeline;
pub mod sweep;

pub use config::{parse_config, Preset, RunConfig};
pub use pipeline::{execute, fits_text, run_pipeline, with_threads, RunResults};
pub use sweep::{run_sweep, SweepOutcome};
