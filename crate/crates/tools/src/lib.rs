//! File formats, experiment orchestration and the HTTP facade around
//! `recourse-core`.

pub mod api;
pub mod bundle;
pub mod config;
mod error;
pub mod experiments;
pub mod io;
pub mod service;

pub use error::{ToolError, ToolResult};
