//! Concept acquisition from entity abstracts: corpus ingestion, taxonomy induction,
//! topic classification, prompted span extraction, a discrete causal check and
//! evaluation tooling. The `concept` binary drives the pipeline.

pub mod causal;
pub mod checkpoint;
pub mod classifier;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod extractor;
pub mod io;
pub mod nn;
pub mod seed;
pub mod synthetic;
pub mod taxonomy;
pub mod tokenize;

pub use error::{Error, Result};
