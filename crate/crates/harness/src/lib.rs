//! Validation studies, run configuration and the `filament` command line.

pub mod acceptance;
pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod jobs;
pub mod manifest;
pub mod report;
pub mod studies;
pub mod swimmers;

pub use error::{Error, Result};
