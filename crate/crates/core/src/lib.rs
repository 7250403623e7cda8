//! Idiomatic-expression detection toolkit.
//!
//! The crate is organised along the pipeline:
//!
//! - [`corpus`]: annotated corpora (SloIE-style TSV, PARSEME `.cupt`), filtering,
//!   splitting, subsampling, balancing and statistics.
//! - [`embeddings`]: frozen contextual-embedding archives, layer averaging,
//!   subword alignment and a deterministic synthetic provider.
//! - [`model`]: the bidirectional GRU classifier with analytic gradients and
//!   RMSProp training.
//! - [`baseline`]: tf-idf + linear SVM and the trivial default classifiers.
//! - [`ensemble`]: normal-mixture conditional likelihood ensemble and voting.
//! - [`eval`]: metrics, experiment protocols and report emission.

pub mod baseline;
pub mod container;
pub mod corpus;
pub mod embeddings;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
