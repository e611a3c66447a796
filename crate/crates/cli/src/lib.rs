//! Batch front-end for the bosamp toolkit.

pub mod commands;
pub mod config;
pub mod pipeline;
