//! Command-line front end for the corpus toolkit.
//!
//! The library half holds everything the binary does: the pipeline config
//! dialect ([`config`]), plan construction ([`plan`]), the stage
//! implementations ([`stages`]), the runner ([`run`]), and the file-driven
//! math subcommands ([`mathcmd`]). The binary in `main.rs` is a thin clap
//! layer over these, so integration tests can drive the same code paths
//! directly.

pub mod config;
pub mod error;
pub mod mathcmd;
pub mod plan;
pub mod run;
pub mod stages;

pub use error::CliError;
