//! Batch front-end for the cat-state memory simulator: experiment configs and
//! presets, single runs and parameter sweeps with CSV/JSON artifacts, direct
//! oracle queries, and the acceptance-criteria validator.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod oracle_cmd;
pub mod point;
pub mod presets;
pub mod validate;
