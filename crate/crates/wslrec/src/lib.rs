//! File formats, parallel stage drivers and the command line around
//! [`wslrec_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod runner;

pub use error::{CliError, Result};
