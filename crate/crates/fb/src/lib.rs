//! Command line and HTTP front ends for the flatbrowse analysis engine.

pub mod api;
pub mod cli;
pub mod service;

pub use api::{ApiError, ErrorCode, Output, Project, ProjectConfig, RegistryHook};
pub use cli::{run_cli, run_cli_with};
