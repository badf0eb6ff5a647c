//! Motion segmentation of feature-point trajectories by multi-view
//! spectral clustering.
//!
//! Each of three geometric model families (affine, homography,
//! fundamental matrix) is hypothesized from random minimal samples; point
//! preferences over the hypotheses give one ordered-residual affinity per
//! family. The three affinities are fused by kernel addition, pairwise
//! co-regularization or subset-constrained clustering.

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod hypothesis;
pub mod ork;
pub mod pipeline;
pub mod seed;
pub mod spectral;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
pub use fusion::{
    build_subset_constraints, fuse_coregularization, fuse_kernel_addition, fuse_subset_constrained,
    per_view_corrected_labeling, FusionOptions, ViewSet,
};
pub use geometry::{ModelHypothesis, ModelKind};
pub use hypothesis::{sample_hypotheses, ResidualMatrix};
pub use ork::{build_ork, normalize_covisibility, sparsify_epsilon, AffinityMatrix};
pub use pipeline::{segment, segment_single_view, Method, PipelineConfig, Segmentation};
pub use spectral::{cluster_kmeans, embed, normalized_laplacian, Labeling, SpectralEmbedding};
pub use synth::{classification_error, generate_scene, make_benchmark_suite, Archetype, SceneSpec};
pub use trajectory::{load_trajectories, prune_short_tracks, save_trajectories, TrajectorySet};
