//! File formats, plots and the command line for `aqmtune-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod svg;

pub use error::CliError;
