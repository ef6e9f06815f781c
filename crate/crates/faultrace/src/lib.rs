//! IO, file formats, reporting and the CLI around `faultrace-core`.

pub mod campaign;
pub mod cli;
pub mod config;
pub mod ingest;
pub mod model_io;
pub mod pipeline;
pub mod report;
