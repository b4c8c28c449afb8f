//! File formats, moderation queue, HTTP service and CLI around
//! [`tripwire_core`].

pub mod cli;
pub mod config;
pub mod highlight;
pub mod ingest;
pub mod model_file;
pub mod queue;
pub mod report;
pub mod service;
