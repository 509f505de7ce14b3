//! Description-to-code retrieval as question/answer matching in the
//! Poincaré ball.
//!
//! Token embeddings from a frozen encoder are projected by one shared ReLU
//! layer, sum-pooled, kept inside the unit ball, and compared by hyperbolic
//! distance. Training minimizes a pairwise hinge loss over
//! `<description, positive code, negative code>` triples; evaluation ranks
//! every candidate code per description and reports MRR and Recall@k.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod model;
pub mod synthetic;
pub mod train;
pub mod viz;

pub use checkpoint::Checkpoint;
pub use data::{
    embed_corpus, load_corpus, make_triples, pseudo_embed, read_embeddings, write_corpus,
    write_embeddings, CorpusItem, EmbeddingStore, Split, SplitRatios, SplitTriples, Triple,
    TripleDataset,
};
pub use error::{Error, Result};
pub use eval::{
    evaluate, mrr, rank_of, rank_query, recall_at_k, EvalSet, Evaluation, MetricsReport,
    RankingResult,
};
pub use geometry::{
    conformal_factor, distance_gradient, hyperbolic_distance, retract, riemannian_rescale,
    GeometryConfig, PoincarePoint,
};
pub use model::{
    pool_and_normalize, project_word, score, Activation, ModelConfig, ModelParams, QAEmbedding,
    Role, TokenSequence,
};
pub use train::{
    backward, batch_loss, hinge_loss, save_loss_csv, sgd_step, train, write_loss_csv, GradientMode,
    Gradients, TrainConfig, TrainOutcome, TrainingSet, TripleRef,
};
pub use viz::{
    extract_pair_features, pca_2d, write_features_csv, write_projection_csv, PairFeature,
    PairLabel, Projection2d,
};
