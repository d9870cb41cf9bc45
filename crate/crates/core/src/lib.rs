//! Link prediction on attributed networks.
//!
//! The structure graph and an attribute-derived feature graph are embedded
//! independently with node2vec. A logistic model over Hadamard edge features
//! scores candidate pairs in each channel, and the two probabilities are
//! blended with a consensus weight `alpha` chosen on a validation split.

pub mod dataset;
pub mod embedder;
pub mod error;
pub mod eval;
pub mod feature_graph;
pub mod graph;
pub mod link_model;
pub mod seeds;
pub mod splitter;

pub use error::{Error, Result};
