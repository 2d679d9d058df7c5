//! Document service and batch commands for layered text documents.

pub mod commands;
pub mod ops;
pub mod service;

pub use service::{build_app, AppState};
