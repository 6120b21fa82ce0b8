//! Command-line front end for the `msavg` library.

pub mod config;
pub mod data;
pub mod exit;
pub mod fit;
pub mod output;
pub mod simulate;
pub mod verify;
