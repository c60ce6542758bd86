//! Command-line front end for `lirkw-core`: tableau files, CSV tables and
//! run manifests.

pub mod args;
pub mod commands;
pub mod csv_out;
pub mod error;
pub mod manifest;
pub mod tableau_io;

pub use commands::{run, Outcome};
pub use error::{CliError, CliResult};
