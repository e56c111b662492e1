//! Embedding-space audit engine for visual stereotypes in text-to-image
//! generators.
//!
//! Works entirely on dumped feature data: image and text embeddings for
//! the stereotype score and spectral alignment, embedding clusters for
//! prompt discovery, and per-step latent velocities for the propagation
//! index. See [`tensor`] for the on-disk format and [`datamodel`] for the
//! manifests that tie files together.

pub mod datamodel;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod spi;
pub mod stereoscore;
pub mod stop;
pub mod tensor;
pub mod vecops;
pub mod wals;

pub use datamodel::{
    l2_normalize, load_manifest, load_trajectory, save_manifest, save_trajectory, AttributeSpec,
    AwareSets, ConceptDataset, EmbeddingMatrix, LatentTrajectory,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use tensor::{load_tensor, write_tensor, Tensor};
