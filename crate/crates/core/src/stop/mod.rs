//! Cluster discovery and prompt optimization against an image cluster.
//!
//! [`spectral_cluster`] partitions a dataset's features; [`beam_optimize`]
//! then searches token sequences whose text embedding has the highest mean
//! cosine with a chosen cluster. Language-model conditioning and text
//! encoding are abstracted behind [`TokenProposer`] and [`SequenceEmbedder`]
//! so they can be served in-process or by an external [`bridge`].

pub mod beam;
pub mod bridge;
pub mod cluster;
pub mod synthetic;

pub use beam::{
    beam_optimize, beam_optimize_with, mean_similarity, BeamConfig, ClusterObjective,
    OptimizedPrompts, ScoredSequence, SequenceEmbedder, TokenProposer,
};
pub use cluster::{
    adjusted_rand_index, cluster_centroid, spectral_cluster, Affinity, ClusterAssignment,
    ClusterParams,
};
pub use synthetic::SyntheticVocab;
