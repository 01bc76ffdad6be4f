//! Run configuration, file formats and the command drivers.

pub mod commands;
pub mod config;
pub mod format;

pub use commands::{cmd_extract, cmd_fit, cmd_synth, read_report, render_report, ExtractOutcome, ExtractSettings};
pub use config::RunConfig;
pub use format::{read_spectro_map, read_time_trace, write_spectro_map, write_time_trace};
