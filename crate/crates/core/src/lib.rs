//! Likelihood-based assessment of network evolution models.
//!
//! An observed network is treated as an ordered stream of edge events
//! (new node with its targets, or an edge between existing nodes). An inner
//! model assigns every node a selection probability at every step, so the
//! whole stream has an exact likelihood. Models are compared through the
//! per-choice likelihood ratio `c0` against the uniform model, mixture
//! weights are fitted by EM, and fitted models can be grown into artificial
//! networks whose statistics are compared with the real one.
//!
//! Module map:
//! - [`graph`]: growing simple graph with incremental degree/triangle counters
//! - [`models`]: inner-model components, mixtures and probabilities
//! - [`events`]: edge-event streams and the canonical file format
//! - [`likelihood`]: sequence likelihood, `c0`, deviance and AIC
//! - [`estimation`]: EM for mixture weights, grid search for exponents/windows
//! - [`generator`]: growing networks from an outer and inner model
//! - [`stats`]: degree, clustering and assortativity statistics
//! - [`ingest`]: raw edge lists and co-authorship data to event streams
//! - [`cli`]: the `netevo` command-line driver

pub mod cli;
pub mod error;
pub mod estimation;
pub mod events;
mod fenwick;
pub mod generator;
pub mod graph;
pub mod ingest;
pub mod likelihood;
pub mod models;
pub mod stats;

pub use error::{Error, Result};
pub use events::{EdgeEvent, EventFile, EventKind};
pub use graph::{EvolvingGraph, NodeId};
pub use likelihood::{sequence_log_likelihood, LikelihoodReport, SpecPair};
pub use models::{Component, EdgeMode, ModelSpec};
