//! Graph-embedding metafeatures for collaborative-filtering algorithm
//! selection.
//!
//! Rating datasets become weighted bipartite graphs, are reduced by a
//! random walk, described as documents of Weisfeiler-Lehman subgraph tokens
//! and embedded with a PV-DBOW skipgram. The graph vectors (or the classic
//! rating-matrix statistics) then feed a KNN label ranker that predicts how
//! a roster of recommenders ranks on an unseen dataset.

pub mod baselevel;
pub mod config;
pub mod embedding;
pub mod error;
pub mod ingest;
pub mod metalearn;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod seeds;
pub mod statfeatures;
pub mod synth;
pub mod wl;

pub use error::{Error, Result};
