//! Paper embeddings: TF-IDF, DeepWalk, the two GNN variants, and the dense
//! content vectors used as GNN input features.

pub mod aggregate;
pub mod content;
pub mod deepwalk;
pub mod gnn;
pub mod tfidf;

pub use aggregate::{combsage_aggregate, sage_aggregate, Combine};
pub use content::content_vectors;
pub use deepwalk::{deepwalk_embed, DeepWalkConfig, DeepWalkModel};
pub use gnn::{
    gnn_infer, gnn_train, Architecture, EdgeBatch, GnnModel, GnnSpec, GnnTrainConfig,
    GnnTrainReport,
};
pub use tfidf::{tfidf_embed, TfIdfModel};
