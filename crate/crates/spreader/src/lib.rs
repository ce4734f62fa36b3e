//! File formats, synthetic scenarios and the command-line front end for
//! `spreader-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
