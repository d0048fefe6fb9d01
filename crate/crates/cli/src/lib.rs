//! Batch front-end for `emlab`: config parsing, experiment orchestration
//! and CSV emission.

pub mod config;
pub mod experiments;
pub mod output;
