//! Batch pipeline, synthetic data generator and subcommands for the
//! `thermoface` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod synth;
