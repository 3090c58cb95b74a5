pub mod apk;
pub mod config;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod signal;
pub mod stats;
