//! Experiment runner for content-creator competition simulations.

pub mod commands;
pub mod config;
pub mod output;
