//! Command-line front end: configuration, commands and outputs.

pub mod commands;
pub mod config;
pub mod error;
