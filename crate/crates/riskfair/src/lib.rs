//! County table ingest, run configuration, report emission and the
//! `riskfair` command-line tool, on top of `riskfair-core`.

pub mod artifact;
pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod modelio;
pub mod plots;
pub mod report;
pub mod schema;
pub mod summary;
pub mod tabular;

pub use error::{AppError, AppResult};
