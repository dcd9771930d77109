//! Offline evaluation of citation-based research-paper recommenders.
//!
//! The crate ingests a citation corpus, builds year-bounded graph snapshots,
//! learns paper embeddings (TF-IDF, DeepWalk, a mean-aggregating GraphSAGE
//! variant and a component-splitting variant), trains a pairwise MLP scorer
//! on co-citation pairs and evaluates its rankings on relevance, novelty and
//! diversity.

// `!(x > 0.0)` is how NaN gets rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

pub mod cocite;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod recommend;
pub mod report;
pub mod seed;
pub mod synth;

pub use cocite::{extract_cocitations, relevant_set, CoCitation, CoCitations};
pub use corpus::{load_corpus, Corpus, CorpusStats, Paper};
pub use error::{Error, Result};
pub use graph::{Direction, GraphSnapshot, NeighborPartition};
pub use matrix::{load_embedding_matrix, EmbeddingMatrix};
