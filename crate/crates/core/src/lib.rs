//! Tools for measuring how much scalar magnitude information (mass, length,
//! price) can be read linearly out of frozen object embeddings.
//!
//! The crate covers the whole pipeline: bucketed empirical distributions of
//! attribute values, embedding tables and PCA, the regression and
//! distribution probes, the evaluation metrics, a cross-validation harness
//! and the scientific-notation corpus rewriter.

pub mod canonical;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod probe;
pub mod scalar;

pub use error::{Error, Result};
