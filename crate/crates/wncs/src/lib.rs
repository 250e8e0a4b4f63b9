//! File formats, tables and the command-line front end for `wncs-core`.

pub mod scenario_file;
pub mod tables;
pub mod trace_csv;

pub use wncs_core as core;
