//! Training harness, file formats and command-line surface on top of
//! `uavnet-core`.

pub mod apc;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod export;
pub mod training;
