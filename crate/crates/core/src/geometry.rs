//! Two-frame geometric models: linear minimal-sample fits and Sampson
//! residuals for affine maps, homographies and fundamental matrices.
//!
//! All fits condition their input with [`hartley_normalize`] and return the
//! model in raw pixel coordinates. Homographies and fundamental matrices
//! are scaled to unit Frobenius norm; affine maps keep the last row
//! `[0, 0, 1]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Relative condition number above which a design block is degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// Denominators below this make the Sampson residual infinite.
const SAMPSON_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Affine,
    Homography,
    Fundamental,
}

impl ModelKind {
    /// The three views, in fusion order.
    pub const ALL: [ModelKind; 3] = [ModelKind::Affine, ModelKind::Homography, ModelKind::Fundamental];

    /// Minimal sample size.
    pub fn sample_size(self) -> usize {
        match self {
            ModelKind::Affine => 3,
            ModelKind::Homography => 4,
            ModelKind::Fundamental => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Affine => "affine",
            ModelKind::Homography => "homography",
            ModelKind::Fundamental => "fundamental",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "affine" | "a" => Ok(ModelKind::Affine),
            "homography" | "h" => Ok(ModelKind::Homography),
            "fundamental" | "f" => Ok(ModelKind::Fundamental),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

/// One fitted model bound to the frame pair and sample that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelHypothesis {
    pub kind: ModelKind,
    /// `(f1, f2)` with `f1 < f2`; the model maps frame `f1` to frame `f2`.
    pub frame_pair: (usize, usize),
    pub matrix: Matrix3<f64>,
    pub sample_ids: Vec<usize>,
}

impl ModelHypothesis {
    pub fn residual(&self, src: Point, dst: Point) -> f64 {
        sampson_residual(self.kind, &self.matrix, src, dst)
    }
}

/// Similarity that moves the centroid to the origin and scales the RMS
/// distance from it to `sqrt(2)`.
pub fn hartley_normalize(points: &[Point]) -> Result<(Matrix3<f64>, Vec<Point>)> {
    if points.is_empty() {
        return Err(Error::DegenerateSample("no points to normalize".into()));
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let ms = points
        .iter()
        .map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2))
        .sum::<f64>()
        / n;
    let rms = ms.sqrt();
    if rms.is_nan() || rms <= 1e-12 * (1.0 + cx.abs().max(cy.abs())) {
        return Err(Error::DegenerateSample("points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / rms;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let normalized = points.iter().map(|p| [s * (p[0] - cx), s * (p[1] - cy)]).collect();
    Ok((t, normalized))
}

fn check_pairs(src: &[Point], dst: &[Point], kind: ModelKind) -> Result<()> {
    let p = kind.sample_size();
    if src.len() != p || dst.len() != p {
        return Err(Error::DegenerateSample(format!(
            "{kind} needs exactly {p} correspondences, got {} / {}",
            src.len(),
            dst.len()
        )));
    }
    Ok(())
}

fn condition(m: &Matrix3<f64>) -> f64 {
    let sv = m.singular_values();
    let (max, min) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    if max == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn point_rows(a: Point, b: Point, c: Point) -> Matrix3<f64> {
    Matrix3::new(a[0], a[1], 1.0, b[0], b[1], 1.0, c[0], c[1], 1.0)
}

fn unit_frobenius(m: Matrix3<f64>) -> Matrix3<f64> {
    m / m.norm()
}

/// Exact affine interpolation of three correspondences.
pub fn fit_affine(src: &[Point], dst: &[Point]) -> Result<Matrix3<f64>> {
    check_pairs(src, dst, ModelKind::Affine)?;
    let (t1, s) = hartley_normalize(src)?;
    let (t2, d) = hartley_normalize(dst)?;
    let design = point_rows(s[0], s[1], s[2]);
    if condition(&design) > MAX_CONDITION {
        return Err(Error::DegenerateSample("affine source points are collinear".into()));
    }
    let inv = design
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSample("affine design block is singular".into()))?;
    let xs = inv * Vector3::new(d[0][0], d[1][0], d[2][0]);
    let ys = inv * Vector3::new(d[0][1], d[1][1], d[2][1]);
    let an = Matrix3::new(xs[0], xs[1], xs[2], ys[0], ys[1], ys[2], 0.0, 0.0, 1.0);
    let t2_inv = t2
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular normalizer".into()))?;
    let mut a = t2_inv * an * t1;
    a[(2, 0)] = 0.0;
    a[(2, 1)] = 0.0;
    a /= a[(2, 2)];
    a[(2, 2)] = 1.0;
    Ok(a)
}

/// Right singular vector of the smallest singular value, along with all
/// singular values sorted descending.
fn null_vector(a: SMatrix<f64, 9, 9>) -> Result<(SVector<f64, 9>, [f64; 9])> {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut sorted = [0.0; 9];
    for (k, &i) in order.iter().enumerate() {
        sorted[k] = svd.singular_values[i];
    }
    let v = v_t.row(order[8]).transpose();
    Ok((v, sorted))
}

fn reshape(v: &SVector<f64, 9>) -> Matrix3<f64> {
    Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8])
}

/// Normalized DLT on four correspondences.
pub fn fit_homography(src: &[Point], dst: &[Point]) -> Result<Matrix3<f64>> {
    check_pairs(src, dst, ModelKind::Homography)?;
    let (t1, s) = hartley_normalize(src)?;
    let (t2, d) = hartley_normalize(dst)?;
    for pts in [&s, &d] {
        for skip in 0..4 {
            let tri: Vec<Point> = (0..4).filter(|&k| k != skip).map(|k| pts[k]).collect();
            if condition(&point_rows(tri[0], tri[1], tri[2])) > MAX_CONDITION {
                return Err(Error::DegenerateSample(
                    "three homography sample points are collinear".into(),
                ));
            }
        }
    }
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for k in 0..4 {
        let [x, y] = s[k];
        let [u, v] = d[k];
        let r = 2 * k;
        a.row_mut(r)
            .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
        a.row_mut(r + 1)
            .copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u]);
    }
    let (h, sv) = null_vector(a)?;
    if sv[7] - sv[8] <= 1e-10 * sv[0] {
        return Err(Error::Numerical("homography null space is not one-dimensional".into()));
    }
    let hn = reshape(&h);
    if condition(&hn) > MAX_CONDITION {
        return Err(Error::DegenerateSample("homography is singular".into()));
    }
    let t2_inv = t2
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular normalizer".into()))?;
    Ok(unit_frobenius(t2_inv * hn * t1))
}

/// Result of the normalized eight-point algorithm.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalFit {
    /// Rank-2 matrix, unit Frobenius norm.
    pub matrix: Matrix3<f64>,
    /// Linear solution before the rank-2 truncation, unit Frobenius norm.
    pub linear: Matrix3<f64>,
}

/// Normalized eight-point algorithm with rank-2 enforcement.
pub fn fit_fundamental(src: &[Point], dst: &[Point]) -> Result<FundamentalFit> {
    check_pairs(src, dst, ModelKind::Fundamental)?;
    let (t1, s) = hartley_normalize(src)?;
    let (t2, d) = hartley_normalize(dst)?;
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for k in 0..8 {
        let [x, y] = s[k];
        let [u, v] = d[k];
        a.row_mut(k)
            .copy_from_slice(&[u * x, u * y, u, v * x, v * y, v, x, y, 1.0]);
    }
    let (f, sv) = null_vector(a)?;
    if sv[7] < sv[0] / MAX_CONDITION {
        return Err(Error::DegenerateSample("eight-point design matrix has rank < 8".into()));
    }
    let fn_lin = reshape(&f);
    let svd = fn_lin.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD of F failed".into())),
    };
    let mut sigma = svd.singular_values;
    let smallest = sigma.imin();
    sigma[smallest] = 0.0;
    let fn_rank2 = u * Matrix3::from_diagonal(&sigma) * v_t;
    let linear = unit_frobenius(t2.transpose() * fn_lin * t1);
    let matrix = unit_frobenius(t2.transpose() * fn_rank2 * t1);
    Ok(FundamentalFit { matrix, linear })
}

/// Fit a model of the given kind on a minimal sample.
pub fn fit_model(kind: ModelKind, src: &[Point], dst: &[Point]) -> Result<Matrix3<f64>> {
    match kind {
        ModelKind::Affine => fit_affine(src, dst),
        ModelKind::Homography => fit_homography(src, dst),
        ModelKind::Fundamental => fit_fundamental(src, dst).map(|f| f.matrix),
    }
}

/// First-order geometric error of `dst` against `src` under `m`.
///
/// For fundamental matrices this is the Sampson distance of the epipolar
/// constraint. For affine maps and homographies it is the Sampson
/// approximation of the two-row transfer constraint `dst x (M src) = 0`.
pub fn sampson_residual(kind: ModelKind, m: &Matrix3<f64>, src: Point, dst: Point) -> f64 {
    let x = Vector3::new(src[0], src[1], 1.0);
    let xp = Vector3::new(dst[0], dst[1], 1.0);
    match kind {
        ModelKind::Fundamental => {
            let fx = m * x;
            let ftxp = m.transpose() * xp;
            let num = xp.dot(&fx);
            let den = fx[0] * fx[0] + fx[1] * fx[1] + ftxp[0] * ftxp[0] + ftxp[1] * ftxp[1];
            if den < SAMPSON_FLOOR {
                return f64::INFINITY;
            }
            num * num / den
        }
        ModelKind::Affine | ModelKind::Homography => {
            let hx = m * x;
            let (u, v) = (dst[0], dst[1]);
            let e1 = v * hx[2] - hx[1];
            let e2 = hx[0] - u * hx[2];
            // d(e)/d(x, y, u, v)
            let j1 = [v * m[(2, 0)] - m[(1, 0)], v * m[(2, 1)] - m[(1, 1)], 0.0, hx[2]];
            let j2 = [m[(0, 0)] - u * m[(2, 0)], m[(0, 1)] - u * m[(2, 1)], -hx[2], 0.0];
            let dot = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
            let (a, b, c) = (dot(&j1, &j1), dot(&j1, &j2), dot(&j2, &j2));
            let det = a * c - b * b;
            if det.abs() < SAMPSON_FLOOR {
                return f64::INFINITY;
            }
            // e^T (J J^T)^-1 e for the symmetric 2x2 [[a, b], [b, c]]
            let r = (c * e1 * e1 - 2.0 * b * e1 * e2 + a * e2 * e2) / det;
            r.max(0.0)
        }
    }
}
