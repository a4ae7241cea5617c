//! Experiment driver for the `hpv` binary: settings, subcommands and
//! rendering.

pub mod commands;
pub mod config;
pub mod render;
