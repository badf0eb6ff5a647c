//! Ordered residual kernel: point affinities from shared hypothesis
//! preferences.
//!
//! Each point takes as inliers the hypotheses whose residual does not
//! exceed its own `h`-th smallest residual; the affinity of two points is
//! the number of hypotheses both accept. Only residual orderings matter.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ModelKind;
use crate::hypothesis::ResidualMatrix;
use crate::trajectory::TrajectorySet;

pub const DEFAULT_H_FRACTION: f64 = 0.1;
pub const DEFAULT_EPSILON_QUANTILE: f64 = 0.75;

/// Symmetric nonnegative point affinity for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    /// Model family that induced the kernel; `None` for a fused kernel.
    pub kind: Option<ModelKind>,
    pub values: DMatrix<f64>,
    pub h_fraction: Option<f64>,
    pub epsilon_quantile: Option<f64>,
}

impl AffinityMatrix {
    pub fn new(kind: Option<ModelKind>, values: DMatrix<f64>) -> Self {
        AffinityMatrix {
            kind,
            values,
            h_fraction: None,
            epsilon_quantile: None,
        }
    }

    pub fn num_points(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        let v = &self.values;
        v.is_square() && (0..v.nrows()).all(|i| (0..i).all(|j| v[(i, j)] == v[(j, i)]))
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Number of nonzero off-diagonal entries.
    pub fn off_diagonal_nnz(&self) -> usize {
        let n = self.num_points();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.values[(i, j)] != 0.0)
            .count()
    }
}

struct Bits(Vec<u64>);

impl Bits {
    fn zeros(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, k: usize) {
        self.0[k / 64] |= 1 << (k % 64);
    }

    fn and_count(&self, other: &Bits) -> u32 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones()).sum()
    }
}

/// Inlier indicator of one point: hypotheses with residual at most the
/// `ceil(h_fraction * K_i)`-th smallest non-missing residual.
fn inlier_set(r: &ResidualMatrix, point: usize, h_fraction: f64) -> Result<Bits> {
    let (values, missing) = r.row(point);
    let mut present: Vec<usize> = (0..values.len()).filter(|&k| !missing[k]).collect();
    if present.is_empty() {
        return Err(Error::NoResiduals { point });
    }
    // stable: ties keep hypothesis order
    present.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let h = ((h_fraction * present.len() as f64).ceil() as usize).clamp(1, present.len());
    let tau = values[present[h - 1]];
    let mut bits = Bits::zeros(values.len());
    for &k in &present {
        if values[k] <= tau {
            bits.set(k);
        }
    }
    Ok(bits)
}

/// Raw ORK co-occurrence counts.
pub fn build_ork(r: &ResidualMatrix, h_fraction: f64) -> Result<AffinityMatrix> {
    if !(h_fraction > 0.0 && h_fraction <= 1.0) {
        return Err(Error::Config(format!("h_fraction must be in (0, 1], got {h_fraction}")));
    }
    let n = r.num_points();
    let sets: Vec<Bits> = (0..n)
        .into_par_iter()
        .map(|i| inlier_set(r, i, h_fraction))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| sets[i].and_count(&sets[j]) as f64).collect())
        .collect();
    let values = DMatrix::from_fn(n, n, |i, j| if j <= i { rows[i][j] } else { rows[j][i] });
    Ok(AffinityMatrix {
        kind: Some(r.kind),
        values,
        h_fraction: Some(h_fraction),
        epsilon_quantile: None,
    })
}

/// Divide each affinity by the number of frames in which both points are
/// visible (the diagonal by the point's own visible-frame count).
pub fn normalize_covisibility(a: &AffinityMatrix, t: &TrajectorySet) -> Result<AffinityMatrix> {
    let n = a.num_points();
    if t.num_points() != n {
        return Err(Error::SizeMismatch {
            pred: n,
            truth: t.num_points(),
        });
    }
    let vis: Vec<Bits> = (0..n)
        .map(|i| {
            let mut b = Bits::zeros(t.num_frames());
            for f in (0..t.num_frames()).filter(|&f| t.is_visible(i, f)) {
                b.set(f);
            }
            b
        })
        .collect();
    let mut out = a.clone();
    for i in 0..n {
        for j in 0..=i {
            let value = a.values[(i, j)];
            let covis = vis[i].and_count(&vis[j]);
            let scaled = if covis == 0 {
                if value > 0.0 {
                    return Err(Error::CovisibilityMismatch { i, j, value });
                }
                0.0
            } else {
                value / covis as f64
            };
            out.values[(i, j)] = scaled;
            out.values[(j, i)] = scaled;
        }
    }
    Ok(out)
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Epsilon-neighbourhood sparsification with a per-row quantile threshold.
///
/// An entry is dropped only when it falls below the thresholds of both of
/// its rows. A row that would lose every off-diagonal entry keeps its
/// largest one.
pub fn sparsify_epsilon(a: &AffinityMatrix, epsilon_quantile: f64) -> Result<AffinityMatrix> {
    if !(0.0..1.0).contains(&epsilon_quantile) {
        return Err(Error::Config(format!(
            "epsilon quantile must be in [0, 1), got {epsilon_quantile}"
        )));
    }
    if !a.is_symmetric() {
        return Err(Error::Config("sparsify_epsilon needs a symmetric matrix".into()));
    }
    let n = a.num_points();
    let v = &a.values;
    let theta: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .filter(|&j| j != i && v[(i, j)] > 0.0)
                .map(|j| v[(i, j)])
                .collect();
            if row.is_empty() {
                return f64::INFINITY;
            }
            row.sort_by(f64::total_cmp);
            quantile_sorted(&row, epsilon_quantile)
        })
        .collect();

    let mut out = a.clone();
    for i in 0..n {
        for j in 0..i {
            let x = v[(i, j)];
            if x < theta[i] && x < theta[j] {
                out.values[(i, j)] = 0.0;
                out.values[(j, i)] = 0.0;
            }
        }
    }
    for i in 0..n {
        let had = (0..n).any(|j| j != i && v[(i, j)] > 0.0);
        let has = (0..n).any(|j| j != i && out.values[(i, j)] > 0.0);
        if had && !has {
            // first maximal entry by column order
            let best = (0..n)
                .filter(|&j| j != i)
                .fold(None::<usize>, |acc, j| match acc {
                    Some(b) if v[(i, b)] >= v[(i, j)] => Some(b),
                    _ => Some(j),
                })
                .unwrap();
            out.values[(i, best)] = v[(i, best)];
            out.values[(best, i)] = v[(best, i)];
        }
    }
    out.epsilon_quantile = Some(epsilon_quantile);
    Ok(out)
}

/// Full kernel construction for one view: ORK, co-visibility
/// normalization, sparsification.
pub fn build_view_kernel(
    r: &ResidualMatrix,
    t: &TrajectorySet,
    h_fraction: f64,
    epsilon_quantile: f64,
) -> Result<AffinityMatrix> {
    let raw = build_ork(r, h_fraction)?;
    let normalized = normalize_covisibility(&raw, t)?;
    sparsify_epsilon(&normalized, epsilon_quantile)
}

fn uses_triplets(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("coo" | "tri" | "triplets")
    )
}

/// Write an affinity matrix. Extensions `.coo`, `.tri` and `.triplets`
/// select a `i j value` triplet list (0-based, upper triangle including
/// the diagonal, nonzeros only); anything else a dense matrix. Both start
/// with a line holding `N`.
pub fn write_affinity(a: &AffinityMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let n = a.num_points();
    let mut out = format!("{n}\n");
    if uses_triplets(path) {
        for i in 0..n {
            for j in i..n {
                let v = a.values[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:e}").unwrap();
                }
            }
        }
    } else {
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:e}", a.values[(i, j)])).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_affinity(path: impl AsRef<Path>) -> Result<AffinityMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let (hl, head) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
    let n: usize = head.trim().parse().map_err(|_| bad(hl, "bad size"))?;
    let mut values = DMatrix::zeros(n, n);
    if uses_triplets(path) {
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(bad(ln, "expected `i j value`"));
            }
            let i: usize = toks[0].parse().map_err(|_| bad(ln, "bad row index"))?;
            let j: usize = toks[1].parse().map_err(|_| bad(ln, "bad column index"))?;
            let v: f64 = toks[2].parse().map_err(|_| bad(ln, "bad value"))?;
            if i >= n || j >= n {
                return Err(bad(ln, "index out of range"));
            }
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    } else {
        let mut rows = 0;
        for (ln, line) in lines {
            if rows == n {
                return Err(bad(ln, "too many rows"));
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(ln, "bad value")))
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(bad(ln, "wrong row length"));
            }
            for (j, v) in row.into_iter().enumerate() {
                values[(rows, j)] = v;
            }
            rows += 1;
        }
        if rows != n {
            return Err(bad(hl, "too few rows"));
        }
    }
    Ok(AffinityMatrix::new(None, values))
}
