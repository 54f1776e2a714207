//! Behavioral labeling of misinformation spreaders and prediction of their
//! class from follower-graph embeddings.
//!
//! The crate is organized as a batch pipeline:
//!
//! - [`ingest`] parses edge lists, profile tables and share-event logs and
//!   derives per-user exposure times.
//! - [`labeler`] turns exposure/share timelines into one of five behavior
//!   classes and aggregates several per-pair labels into a final class.
//! - [`graph`] holds the compact follower graph, alias samplers and the
//!   binary snapshot format.
//! - [`embed`] trains second-order LINE embeddings with negative sampling.
//! - [`features`] fuses embeddings with profile features and standardizes them.
//! - [`ml`] contains the classifiers, resampling, cross-validation and metrics.
//! - [`synth`] generates planted-class corpora used as an end-to-end oracle.
//! - [`pipeline`] wires the stages together behind a single configuration.

pub mod embed;
pub mod error;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod labeler;
pub mod ml;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
