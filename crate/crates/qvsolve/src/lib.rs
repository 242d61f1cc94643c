//! File formats, result documents and command implementations behind the
//! `qvsolve` binary. The numerics live in `qvsolve-core`.

pub mod cli;
pub mod commands;
pub mod document;
pub mod error;
pub mod json;
pub mod model_file;
pub mod table;

pub use error::{CliError, Result};
