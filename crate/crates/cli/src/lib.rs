//! Ingestion, configuration and artifact writing for the `asve` binary.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod mc;
pub mod output;

pub use config::{Config, TimeScheme};
pub use ingest::{ingest, IngestOptions, Ingested};
