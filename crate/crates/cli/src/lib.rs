//! Command implementations behind the `geosync` binary.

pub mod commands;
pub mod config;
pub mod selftest;
