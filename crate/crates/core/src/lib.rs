//! Topic model evaluation toolkit.
//!
//! Automated metrics (C_V coherence over boolean sliding windows, topic
//! diversity), generation of word-intrusion (TWI) and word-mixing (TWM)
//! annotation tasks, and scoring of the returned annotations.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod metrics;
pub mod model_io;
pub mod registry;
pub mod scoring;
pub mod seed;
pub mod synth;
pub mod taskgen;

pub use error::{Error, ErrorKind, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
