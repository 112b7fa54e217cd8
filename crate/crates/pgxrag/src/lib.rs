//! Std companion to `pgxrag-core`: file formats, the persisted index,
//! remote and cassette backends, the annotation store, batch runs, the HTTP
//! service and the command line.

pub mod backends;
pub mod batch;
pub mod config;
pub mod files;
pub mod index_file;
pub mod kb;
pub mod manifest;
pub mod server;
pub mod store;

pub use pgxrag_core as core;
