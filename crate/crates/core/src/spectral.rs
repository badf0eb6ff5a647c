//! Single-view normalized spectral clustering.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ModelKind;
use crate::ork::AffinityMatrix;
use crate::seed::{derive_seed, rng_from_seed};

pub const DEFAULT_RESTARTS: usize = 20;
const KMEANS_MAX_ITERS: usize = 300;
const KMEANS_REL_TOL: f64 = 1e-9;
const EIGEN_MAX_ITERS: usize = 10_000;

/// Orthonormal basis of the `M` smallest eigenvectors of a symmetric
/// operator.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `N x M`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Model family of the view; `None` when fused.
    pub view: Option<ModelKind>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl SpectralEmbedding {
    /// `U U^T`, invariant to rotations within the basis.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Cluster assignment, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
    /// Set when k-means ended with an empty cluster.
    pub degenerate: bool,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, num_clusters: usize) -> Self {
        Labeling {
            labels,
            num_clusters,
            degenerate: false,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `I - D^-1/2 K D^-1/2`, with `D` the row sums of `K` (diagonal included).
pub fn normalized_laplacian(a: &AffinityMatrix) -> Result<DMatrix<f64>> {
    let k = &a.values;
    let n = k.nrows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = k.row(i).iter().sum();
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::ZeroDegree { point: i })
            }
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let off = k[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]);
        if i == j {
            1.0 - off
        } else {
            -off
        }
    }))
}

/// Eigenvectors of the `m` smallest eigenvalues of a symmetric matrix.
///
/// Each column's largest-magnitude entry is made positive.
pub fn smallest_eigenvectors(op: &DMatrix<f64>, m: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = op.nrows();
    if m == 0 || m > n {
        return Err(Error::Config(format!("embedding dimension {m} outside 1..={n}")));
    }
    let eig = SymmetricEigen::try_new(op.clone(), f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::Eigen(format!("no convergence on a {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut basis = DMatrix::zeros(n, m);
    let mut values = Vec::with_capacity(m);
    for (c, &idx) in order.iter().take(m).enumerate() {
        let mut col = eig.eigenvectors.column(idx).into_owned();
        if col[col.iamax()] < 0.0 {
            col.neg_mut();
        }
        basis.set_column(c, &col);
        values.push(eig.eigenvalues[idx]);
    }
    Ok((basis, values))
}

/// Spectral embedding of a Laplacian: its `m` trailing eigenvectors.
pub fn embed(laplacian: &DMatrix<f64>, m: usize, view: Option<ModelKind>) -> Result<SpectralEmbedding> {
    let (basis, eigenvalues) = smallest_eigenvectors(laplacian, m)?;
    Ok(SpectralEmbedding {
        basis,
        view,
        eigenvalues,
    })
}

/// `tr(U^T A U)`.
pub fn trace_form(u: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    (u.transpose() * a * u).trace()
}

struct KMeansRun {
    labels: Vec<usize>,
    inertia: f64,
    empty: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[next].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn nearest(row: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(row, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(rows: &[Vec<f64>], k: usize, seed: u64) -> KMeansRun {
    let mut rng = rng_from_seed(seed);
    let dim = rows[0].len();
    let mut centers = kmeans_pp(rows, k, &mut rng);
    let mut labels = vec![0; rows.len()];
    let mut prev = f64::INFINITY;
    let mut inertia = f64::INFINITY;
    let mut empty = false;
    for _ in 0..KMEANS_MAX_ITERS {
        let mut dists = vec![0.0; rows.len()];
        for (i, r) in rows.iter().enumerate() {
            let (c, d) = nearest(r, &centers);
            labels[i] = c;
            dists[i] = d;
        }
        // re-seed empty clusters from the farthest point of a cluster with
        // at least two members
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        empty = false;
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..rows.len())
                .filter(|&i| counts[labels[i]] > 1 && dists[i] > 0.0)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            match far {
                Some(i) => {
                    counts[labels[i]] -= 1;
                    counts[c] = 1;
                    labels[i] = c;
                    dists[i] = 0.0;
                }
                None => empty = true,
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (r, &l) in rows.iter().zip(&labels) {
            sums[l].iter_mut().zip(r).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        inertia = rows.iter().zip(&labels).map(|(r, &l)| sq_dist(r, &centers[l])).sum();
        if (prev - inertia).abs() <= KMEANS_REL_TOL * prev.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = inertia;
    }
    KMeansRun { labels, inertia, empty }
}

/// Row-normalize the embedding and run k-means++ / Lloyd, keeping the best
/// of `restarts` runs by inertia.
pub fn cluster_kmeans(u: &DMatrix<f64>, m: usize, restarts: usize, seed: u64) -> Result<Labeling> {
    if m == 0 {
        return Err(Error::Config("cluster count must be positive".into()));
    }
    if restarts == 0 {
        return Err(Error::Config("k-means needs at least one restart".into()));
    }
    let rows: Vec<Vec<f64>> = u
        .row_iter()
        .map(|r| {
            let norm = r.norm();
            if norm > 0.0 {
                r.iter().map(|x| x / norm).collect()
            } else {
                vec![0.0; r.len()]
            }
        })
        .collect();
    if rows.is_empty() {
        return Ok(Labeling::new(Vec::new(), m));
    }
    let runs: Vec<KMeansRun> = (0..restarts)
        .into_par_iter()
        .map(|r| lloyd(&rows, m, derive_seed(seed, "kmeans", r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .unwrap();
    Ok(Labeling {
        labels: best.labels,
        num_clusters: m,
        degenerate: best.empty,
    })
}

/// Laplacian, embedding and k-means on one affinity matrix.
pub fn cluster_affinity(
    a: &AffinityMatrix,
    m: usize,
    restarts: usize,
    seed: u64,
) -> Result<(Labeling, SpectralEmbedding)> {
    let l = normalized_laplacian(a)?;
    let emb = embed(&l, m, a.kind)?;
    let labels = cluster_kmeans(&emb.basis, m, restarts, seed)?;
    Ok((labels, emb))
}
