//! Multi-view spectral clustering over the affine, homography and
//! fundamental-matrix views.
//!
//! Three fusion schemes share one [`ViewSet`]:
//!
//! * kernel addition clusters the sum of the (optionally max-scaled) view
//!   kernels;
//! * pairwise co-regularization alternates per-view eigenproblems that
//!   reward agreement between the view projectors `U_v U_v^T`;
//! * subset-constrained clustering alternates per-view eigenproblems on
//!   `L_v - gamma Q_v`, where `Q_v` carries the hierarchy
//!   `K_A <= K_H <= K_F` from the neighbouring views' reconstructed
//!   affinities.
//!
//! The two alternating schemes finish with k-means on the concatenated
//! per-view embeddings.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::ModelKind;
use crate::ork::AffinityMatrix;
use crate::spectral::{
    cluster_affinity, cluster_kmeans, embed, normalized_laplacian, smallest_eigenvectors, trace_form, Labeling,
    SpectralEmbedding,
};

pub const DEFAULT_LAMBDA: f64 = 1e-2;
pub const DEFAULT_GAMMA: f64 = 1e-2;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 50;

/// Coefficients above this make the alternating schemes prone to
/// oscillation.
pub const STABLE_COEFFICIENT: f64 = 1e-1;

/// The three views in fixed order: affine, homography, fundamental.
#[derive(Debug, Clone)]
pub struct ViewSet {
    pub kernels: Vec<AffinityMatrix>,
    pub laplacians: Vec<DMatrix<f64>>,
    /// Independent single-view embeddings.
    pub embeddings: Vec<SpectralEmbedding>,
    pub num_clusters: usize,
}

impl ViewSet {
    pub fn new(kernels: Vec<AffinityMatrix>, num_clusters: usize) -> Result<Self> {
        if kernels.len() != ModelKind::ALL.len() {
            return Err(Error::Config(format!("expected 3 views, got {}", kernels.len())));
        }
        for (k, want) in kernels.iter().zip(ModelKind::ALL) {
            if k.kind.is_some_and(|kind| kind != want) {
                return Err(Error::Config(format!(
                    "views must be ordered affine, homography, fundamental; found {} at the {want} slot",
                    k.kind.unwrap()
                )));
            }
        }
        let n = kernels[0].num_points();
        if kernels.iter().any(|k| k.num_points() != n) {
            return Err(Error::Config("views disagree on the point count".into()));
        }
        let laplacians = kernels.iter().map(normalized_laplacian).collect::<Result<Vec<_>>>()?;
        let embeddings = laplacians
            .iter()
            .zip(ModelKind::ALL)
            .map(|(l, kind)| embed(l, num_clusters, Some(kind)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ViewSet {
            kernels,
            laplacians,
            embeddings,
            num_clusters,
        })
    }

    pub fn num_points(&self) -> usize {
        self.kernels[0].num_points()
    }

    pub fn num_views(&self) -> usize {
        self.kernels.len()
    }
}

/// Options shared by the fusion schemes.
#[derive(Debug, Clone, Copy)]
pub struct FusionOptions {
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FusionOptions {
    fn default() -> Self {
        FusionOptions {
            restarts: crate::spectral::DEFAULT_RESTARTS,
            seed: 0,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

fn warn_unstable(name: &str, value: f64) {
    if value > STABLE_COEFFICIENT {
        log::warn!("{name} = {value} exceeds {STABLE_COEFFICIENT}; the alternating updates may not converge");
    }
}

fn concat(embeddings: &[SpectralEmbedding]) -> DMatrix<f64> {
    let n = embeddings[0].basis.nrows();
    let cols: usize = embeddings.iter().map(SpectralEmbedding::dim).sum();
    let mut out = DMatrix::zeros(n, cols);
    let mut c = 0;
    for e in embeddings {
        out.columns_mut(c, e.dim()).copy_from(&e.basis);
        c += e.dim();
    }
    out
}

/// k-means on the horizontally concatenated embeddings.
pub fn cluster_concatenated(
    embeddings: &[SpectralEmbedding],
    m: usize,
    restarts: usize,
    seed: u64,
) -> Result<Labeling> {
    cluster_kmeans(&concat(embeddings), m, restarts, seed)
}

/// Sum of the view kernels, each divided by its largest entry when
/// `rescale` is set.
pub fn summed_kernel(views: &ViewSet, rescale: bool) -> AffinityMatrix {
    let n = views.num_points();
    let mut sum = DMatrix::zeros(n, n);
    for k in &views.kernels {
        let scale = if rescale && k.max_entry() > 0.0 {
            k.max_entry()
        } else {
            1.0
        };
        sum += &k.values / scale;
    }
    AffinityMatrix::new(None, sum)
}

/// Kernel addition: single-view spectral clustering of the summed kernel.
pub fn fuse_kernel_addition(
    views: &ViewSet,
    rescale: bool,
    opts: &FusionOptions,
) -> Result<(Labeling, SpectralEmbedding)> {
    cluster_affinity(
        &summed_kernel(views, rescale),
        views.num_clusters,
        opts.restarts,
        opts.seed,
    )
}

/// One row of the co-regularization objective trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 0 for the initial state, then 1-based sweep number.
    pub sweep: usize,
    /// View updated in this step; `None` for the initial state.
    pub view: Option<ModelKind>,
    /// `tr(U_v^T L_v U_v)` per view.
    pub view_traces: Vec<f64>,
    /// `lambda * sum_v sum_{w != v} tr(U_v U_v^T U_w U_w^T)`.
    pub coupling: f64,
    /// `sum(view_traces) - coupling`.
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct CoRegResult {
    pub labeling: Labeling,
    pub embeddings: Vec<SpectralEmbedding>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub sweeps: usize,
}

/// `tr(U_v U_v^T U_w U_w^T) = ||U_v^T U_w||_F^2`.
fn projector_overlap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a.transpose() * b).norm_squared()
}

fn coreg_row(
    views: &ViewSet,
    embeddings: &[SpectralEmbedding],
    lambda: f64,
    sweep: usize,
    view: Option<ModelKind>,
) -> TraceRow {
    let view_traces: Vec<f64> = embeddings
        .iter()
        .zip(&views.laplacians)
        .map(|(e, l)| trace_form(&e.basis, l))
        .collect();
    let mut overlap = 0.0;
    for v in 0..embeddings.len() {
        for w in 0..embeddings.len() {
            if v != w {
                overlap += projector_overlap(&embeddings[v].basis, &embeddings[w].basis);
            }
        }
    }
    let coupling = lambda * overlap;
    let total = view_traces.iter().sum::<f64>() - coupling;
    TraceRow {
        sweep,
        view,
        view_traces,
        coupling,
        total,
    }
}

/// Pairwise co-regularized spectral clustering.
///
/// Minimizes `sum_v tr(U_v^T L_v U_v) - lambda sum_v sum_{w != v}
/// tr(U_v U_v^T U_w U_w^T)` by exact block-coordinate descent: with the
/// other views fixed the objective in `U_v` is
/// `tr(U_v^T (L_v - 2 lambda sum_{w != v} U_w U_w^T) U_v)`, whose minimizer
/// is its `M` smallest eigenvectors. Every step therefore lowers the
/// objective. Iteration stops when a full sweep changes the objective by
/// less than `tol` relative, or after `max_iters` sweeps.
pub fn fuse_coregularization(views: &ViewSet, lambda: f64, opts: &FusionOptions) -> Result<CoRegResult> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    warn_unstable("lambda", lambda);
    let m = views.num_clusters;
    let n = views.num_points();
    let mut embeddings = views.embeddings.clone();
    let mut trace = vec![coreg_row(views, &embeddings, lambda, 0, None)];
    let mut prev = trace[0].total;
    let mut converged = false;
    let mut sweeps = 0;
    for sweep in 1..=opts.max_iters {
        sweeps = sweep;
        for (v, kind) in ModelKind::ALL.iter().enumerate().take(views.num_views()) {
            let mut op = views.laplacians[v].clone();
            for (w, e) in embeddings.iter().enumerate() {
                if w != v {
                    op -= (2.0 * lambda) * (&e.basis * e.basis.transpose());
                }
            }
            // the operator is symmetric up to rounding
            let op = DMatrix::from_fn(n, n, |i, j| 0.5 * (op[(i, j)] + op[(j, i)]));
            let (basis, eigenvalues) = smallest_eigenvectors(&op, m)?;
            embeddings[v] = SpectralEmbedding {
                basis,
                view: Some(*kind),
                eigenvalues,
            };
            trace.push(coreg_row(views, &embeddings, lambda, sweep, Some(*kind)));
        }
        let cur = trace.last().unwrap().total;
        if (prev - cur).abs() <= opts.tol * prev.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        prev = cur;
    }
    if !converged {
        log::warn!("co-regularization did not converge in {} sweeps", opts.max_iters);
    }
    let labeling = cluster_concatenated(&embeddings, m, opts.restarts, opts.seed)?;
    Ok(CoRegResult {
        labeling,
        embeddings,
        trace,
        converged,
        sweeps,
    })
}

/// CSV rendering of an objective trace.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("step,sweep,view,trace_affine,trace_homography,trace_fundamental,coupling,total\n");
    for (step, row) in trace.iter().enumerate() {
        let view = row.view.map_or("init", ModelKind::name);
        write!(out, "{step},{},{view}", row.sweep).unwrap();
        for t in &row.view_traces {
            write!(out, ",{t:.17e}").unwrap();
        }
        writeln!(out, ",{:.17e},{:.17e}", row.coupling, row.total).unwrap();
    }
    out
}

fn reconstructed(e: &DMatrix<f64>) -> DMatrix<f64> {
    (e * e.transpose()).map(|x| x.clamp(-1.0, 1.0))
}

fn positive_part(k: &DMatrix<f64>) -> DMatrix<f64> {
    k.map(|x| if x > 0.0 { x } else { 0.0 })
}

fn negative_part(k: &DMatrix<f64>) -> DMatrix<f64> {
    k.map(|x| if x < 0.0 { x } else { 0.0 })
}

/// Constraint matrix for view `v` (0 = affine, 1 = homography,
/// 2 = fundamental) from the current embeddings.
///
/// The affine view takes only negative links from the homography view,
/// the fundamental view only positive links from it, and the homography
/// view positive links from the affine view plus negative links from the
/// fundamental view.
pub fn subset_constraint(bases: &[&DMatrix<f64>], v: usize) -> DMatrix<f64> {
    match v {
        0 => negative_part(&reconstructed(bases[1])),
        1 => positive_part(&reconstructed(bases[0])) + negative_part(&reconstructed(bases[2])),
        2 => positive_part(&reconstructed(bases[1])),
        _ => panic!("view index {v} out of range"),
    }
}

/// All three constraint matrices for a fixed set of embeddings.
pub fn build_subset_constraints(bases: &[&DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    if bases.len() != 3 {
        return Err(Error::Config(format!(
            "subset constraints need 3 views, got {}",
            bases.len()
        )));
    }
    Ok((0..3).map(|v| subset_constraint(bases, v)).collect())
}

#[derive(Debug, Clone)]
pub struct SubsetResult {
    pub labeling: Labeling,
    pub embeddings: Vec<SpectralEmbedding>,
    pub converged: bool,
    pub sweeps: usize,
    /// Largest projector change over the views, per sweep.
    pub deltas: Vec<f64>,
}

/// Subset-constrained multi-view clustering.
///
/// Starting from the single-view embeddings, each sweep updates the views
/// in order, replacing `U_v` by the `M` smallest eigenvectors of
/// `L_v - gamma Q_v` with `Q_v` built from the latest embeddings. Stops
/// when no view's projector moves by `tol` in Frobenius norm; running out
/// of sweeps is reported, not an error.
pub fn fuse_subset_constrained(views: &ViewSet, gamma: f64, opts: &FusionOptions) -> Result<SubsetResult> {
    if views.num_views() != 3 {
        return Err(Error::Config("subset clustering needs exactly 3 views".into()));
    }
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Config(format!("gamma must be nonnegative, got {gamma}")));
    }
    warn_unstable("gamma", gamma);
    let m = views.num_clusters;
    let mut embeddings = views.embeddings.clone();
    let mut deltas = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    for sweep in 1..=opts.max_iters {
        sweeps = sweep;
        let mut delta: f64 = 0.0;
        for (v, kind) in ModelKind::ALL.iter().enumerate() {
            let q = {
                let bases: Vec<&DMatrix<f64>> = embeddings.iter().map(|e| &e.basis).collect();
                subset_constraint(&bases, v)
            };
            let op = &views.laplacians[v] - gamma * q;
            let (basis, eigenvalues) = smallest_eigenvectors(&op, m)?;
            let updated = SpectralEmbedding {
                basis,
                view: Some(*kind),
                eigenvalues,
            };
            delta = delta.max((updated.projector() - embeddings[v].projector()).norm());
            embeddings[v] = updated;
        }
        deltas.push(delta);
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "subset-constrained clustering did not converge in {} sweeps",
            opts.max_iters
        );
    }
    let labeling = cluster_concatenated(&embeddings, m, opts.restarts, opts.seed)?;
    Ok(SubsetResult {
        labeling,
        embeddings,
        converged,
        sweeps,
        deltas,
    })
}

/// k-means on one post-fusion view embedding.
pub fn per_view_corrected_labeling(
    embeddings: &[SpectralEmbedding],
    view: ModelKind,
    m: usize,
    restarts: usize,
    seed: u64,
) -> Result<Labeling> {
    let e = embeddings
        .iter()
        .find(|e| e.view == Some(view))
        .ok_or_else(|| Error::Config(format!("no {view} embedding")))?;
    cluster_kmeans(&e.basis, m, restarts, seed)
}
