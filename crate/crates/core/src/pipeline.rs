//! End-to-end segmentation: kernels per view, then one of six methods.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fusion::{
    fuse_coregularization, fuse_kernel_addition, fuse_subset_constrained, FusionOptions, TraceRow, ViewSet,
    DEFAULT_GAMMA, DEFAULT_LAMBDA, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::geometry::ModelKind;
use crate::hypothesis::{sample_hypotheses, HYPOTHESES_PER_FRAME};
use crate::ork::{build_view_kernel, AffinityMatrix, DEFAULT_EPSILON_QUANTILE, DEFAULT_H_FRACTION};
use crate::seed::derive_seed;
use crate::spectral::{cluster_affinity, Labeling, SpectralEmbedding, DEFAULT_RESTARTS};
use crate::trajectory::TrajectorySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Affine,
    Homography,
    Fundamental,
    KernelAddition,
    CoRegularization,
    Subset,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Affine,
        Method::Homography,
        Method::Fundamental,
        Method::KernelAddition,
        Method::CoRegularization,
        Method::Subset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Affine => "affine",
            Method::Homography => "homography",
            Method::Fundamental => "fundamental",
            Method::KernelAddition => "keradd",
            Method::CoRegularization => "coreg",
            Method::Subset => "subset",
        }
    }

    /// The model family of a single-view method.
    pub fn single_view(self) -> Option<ModelKind> {
        match self {
            Method::Affine => Some(ModelKind::Affine),
            Method::Homography => Some(ModelKind::Homography),
            Method::Fundamental => Some(ModelKind::Fundamental),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Hypotheses per model family; `None` means 500 per frame.
    pub budget: Option<usize>,
    pub h_fraction: f64,
    pub epsilon_quantile: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    /// Scale each kernel to unit maximum before kernel addition.
    pub kernel_rescale: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            budget: None,
            h_fraction: DEFAULT_H_FRACTION,
            epsilon_quantile: DEFAULT_EPSILON_QUANTILE,
            lambda: DEFAULT_LAMBDA,
            gamma: DEFAULT_GAMMA,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            kernel_rescale: true,
        }
    }
}

impl PipelineConfig {
    pub fn budget_for(&self, t: &TrajectorySet) -> usize {
        self.budget.unwrap_or(HYPOTHESES_PER_FRAME * t.num_frames())
    }

    pub fn fusion_options(&self) -> FusionOptions {
        FusionOptions {
            restarts: self.restarts,
            seed: derive_seed(self.seed, "kmeans", 0),
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

/// Sparsified, co-visibility-normalized ORK kernel of one model family.
pub fn view_kernel(t: &TrajectorySet, kind: ModelKind, cfg: &PipelineConfig) -> Result<AffinityMatrix> {
    let seed = derive_seed(cfg.seed, "hypotheses", kind as u64);
    let residuals = sample_hypotheses(t, kind, cfg.budget_for(t), seed)?;
    build_view_kernel(&residuals, t, cfg.h_fraction, cfg.epsilon_quantile)
}

/// Kernels for all three views, in fusion order.
pub fn view_kernels(t: &TrajectorySet, cfg: &PipelineConfig) -> Result<Vec<AffinityMatrix>> {
    ModelKind::ALL.iter().map(|&k| view_kernel(t, k, cfg)).collect()
}

pub fn build_views(t: &TrajectorySet, m: usize, cfg: &PipelineConfig) -> Result<ViewSet> {
    ViewSet::new(view_kernels(t, cfg)?, m)
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub method: Method,
    pub labeling: Labeling,
    /// Final embeddings: one for single-view methods and kernel addition,
    /// one per view for the alternating schemes.
    pub embeddings: Vec<SpectralEmbedding>,
    /// Objective trace, co-regularization only.
    pub trace: Option<Vec<TraceRow>>,
    pub converged: bool,
}

/// Run `method` on precomputed views.
pub fn segment_views(views: &ViewSet, method: Method, cfg: &PipelineConfig) -> Result<Segmentation> {
    let m = views.num_clusters;
    let opts = cfg.fusion_options();
    let (labeling, embeddings, trace, converged) = match method {
        Method::Affine | Method::Homography | Method::Fundamental => {
            let v = method.single_view().unwrap() as usize;
            let (labeling, emb) = cluster_affinity(&views.kernels[v], m, opts.restarts, opts.seed)?;
            (labeling, vec![emb], None, true)
        }
        Method::KernelAddition => {
            let (labeling, emb) = fuse_kernel_addition(views, cfg.kernel_rescale, &opts)?;
            (labeling, vec![emb], None, true)
        }
        Method::CoRegularization => {
            let r = fuse_coregularization(views, cfg.lambda, &opts)?;
            (r.labeling, r.embeddings, Some(r.trace), r.converged)
        }
        Method::Subset => {
            let r = fuse_subset_constrained(views, cfg.gamma, &opts)?;
            (r.labeling, r.embeddings, None, r.converged)
        }
    };
    Ok(Segmentation {
        method,
        labeling,
        embeddings,
        trace,
        converged,
    })
}

/// Segment a trajectory set into `m` motions.
pub fn segment(t: &TrajectorySet, m: usize, method: Method, cfg: &PipelineConfig) -> Result<Segmentation> {
    segment_with_kernels(t, m, method, cfg).map(|(s, _)| s)
}

/// Like [`segment`], also returning the kernels it built: one for a
/// single-view method, all three otherwise.
pub fn segment_with_kernels(
    t: &TrajectorySet,
    m: usize,
    method: Method,
    cfg: &PipelineConfig,
) -> Result<(Segmentation, Vec<AffinityMatrix>)> {
    if m == 0 || m > t.num_points() {
        return Err(Error::Config(format!(
            "motion count {m} outside 1..={}",
            t.num_points()
        )));
    }
    match method.single_view() {
        Some(kind) => {
            let kernel = view_kernel(t, kind, cfg)?;
            let opts = cfg.fusion_options();
            let (labeling, emb) = cluster_affinity(&kernel, m, opts.restarts, opts.seed)?;
            let seg = Segmentation {
                method,
                labeling,
                embeddings: vec![emb],
                trace: None,
                converged: true,
            };
            Ok((seg, vec![kernel]))
        }
        None => {
            let views = build_views(t, m, cfg)?;
            let seg = segment_views(&views, method, cfg)?;
            Ok((seg, views.kernels))
        }
    }
}

/// Single-view pipeline: hypotheses, ORK, Laplacian, embedding, k-means.
pub fn segment_single_view(t: &TrajectorySet, kind: ModelKind, m: usize, cfg: &PipelineConfig) -> Result<Labeling> {
    let method = match kind {
        ModelKind::Affine => Method::Affine,
        ModelKind::Homography => Method::Homography,
        ModelKind::Fundamental => Method::Fundamental,
    };
    segment(t, m, method, cfg).map(|s| s.labeling)
}
