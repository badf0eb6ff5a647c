//! Reference implementations shared by the integration tests. They favour
//! obviousness over speed.

#![allow(dead_code)]

use moseg::geometry::{ModelKind, Point};
use moseg::hypothesis::ResidualMatrix;
use moseg::seed::rng_from_seed;
use nalgebra::{DMatrix, Matrix3, Rotation3, Vector3};
use rand::Rng;

/// Random residual rows with missing entries (NaN) and occasional ties.
pub fn random_residual_rows(seed: u64, n: usize, k: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..k)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        f64::NAN
                    } else if rng.random_bool(0.3) {
                        // coarse grid to create ties
                        rng.random_range(0..5) as f64
                    } else {
                        rng.random_range(0.0..5.0)
                    }
                })
                .collect();
            if row.iter().all(|v| v.is_nan()) {
                row[rng.random_range(0..k)] = rng.random_range(0.0..5.0);
            }
            row
        })
        .collect()
}

pub fn random_residuals(seed: u64, n: usize, k: usize) -> ResidualMatrix {
    ResidualMatrix::from_rows(ModelKind::Homography, &random_residual_rows(seed, n, k))
}

/// ORK by sorting each row, reading the threshold off the sorted list and
/// taking dot products of 0/1 indicator vectors.
pub fn brute_force_ork(rows: &[Vec<f64>], h: f64) -> DMatrix<f64> {
    let indicators: Vec<Vec<u32>> = rows
        .iter()
        .map(|row| {
            let mut present: Vec<f64> = row.iter().copied().filter(|v| !v.is_nan()).collect();
            present.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rank = ((h * present.len() as f64).ceil() as usize).max(1);
            let tau = present[rank - 1];
            row.iter().map(|&v| u32::from(!v.is_nan() && v <= tau)).collect()
        })
        .collect();
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| {
        indicators[i]
            .iter()
            .zip(&indicators[j])
            .map(|(a, b)| a * b)
            .sum::<u32>() as f64
    })
}

/// Minimum error over every injective relabelling of the predicted
/// clusters onto the true ones.
pub fn brute_force_error(pred: &[usize], truth: &[usize]) -> f64 {
    let k = pred.iter().chain(truth).max().map_or(1, |m| m + 1);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = usize::MAX;
    permute(&mut perm, 0, &mut |p| {
        let wrong = pred.iter().zip(truth).filter(|(&a, &b)| p[a] != b).count();
        best = best.min(wrong);
    });
    best as f64 / pred.len() as f64
}

fn permute(v: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, f);
        v.swap(start, i);
    }
}

/// Entry-by-entry subset constraints: with `k = clamp(u_i . u_j)` for each
/// view, affine takes `min(k_H, 0)`, fundamental `max(k_H, 0)` and
/// homography `max(k_A, 0) + min(k_F, 0)`.
pub fn brute_force_subset(bases: [&DMatrix<f64>; 3]) -> [DMatrix<f64>; 3] {
    let n = bases[0].nrows();
    let k = |v: usize, i: usize, j: usize| {
        let b = bases[v];
        let dot: f64 = (0..b.ncols()).map(|c| b[(i, c)] * b[(j, c)]).sum();
        dot.clamp(-1.0, 1.0)
    };
    [
        DMatrix::from_fn(n, n, |i, j| k(1, i, j).min(0.0)),
        DMatrix::from_fn(n, n, |i, j| k(0, i, j).max(0.0) + k(2, i, j).min(0.0)),
        DMatrix::from_fn(n, n, |i, j| k(1, i, j).max(0.0)),
    ]
}

/// Random orthonormal `n x m` basis.
pub fn random_basis(seed: u64, n: usize, m: usize) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

/// Frobenius-normalize and fix the sign so the largest-magnitude entry is
/// positive.
pub fn canonical(m: &Matrix3<f64>) -> Matrix3<f64> {
    let m = m / m.norm();
    let big = m.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
    if big < 0.0 {
        -m
    } else {
        m
    }
}

pub fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).amax()
}

pub fn apply(h: &Matrix3<f64>, p: Point) -> Point {
    let q = h * Vector3::new(p[0], p[1], 1.0);
    [q[0] / q[2], q[1] / q[2]]
}

pub fn image_point(rng: &mut impl Rng) -> Point {
    [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)]
}

pub fn random_homography(rng: &mut impl Rng) -> Matrix3<f64> {
    let mut j = |s: f64| rng.random_range(-s..s);
    Matrix3::new(
        1.0 + j(0.2),
        j(0.2),
        j(40.0),
        j(0.2),
        1.0 + j(0.2),
        j(40.0),
        j(2e-4),
        j(2e-4),
        1.0,
    )
}

pub fn intrinsics() -> Matrix3<f64> {
    Matrix3::new(500.0, 0.0, 320.0, 0.0, 500.0, 240.0, 0.0, 0.0, 1.0)
}

pub fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t[2], t[1], t[2], 0.0, -t[0], -t[1], t[0], 0.0)
}

/// Two calibrated views of random points: returns the ground-truth F and
/// eight noise-free correspondences.
pub fn epipolar_pair(rng: &mut impl Rng) -> (Matrix3<f64>, Vec<Point>, Vec<Point>) {
    let k = intrinsics();
    let r = Rotation3::from_scaled_axis(Vector3::new(
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
    ));
    let t = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.3..0.3),
    );
    let k_inv = k.try_inverse().unwrap();
    let f = k_inv.transpose() * skew(&t) * r.matrix() * k_inv;
    let project = |x: Vector3<f64>| {
        let p = k * x;
        [p[0] / p[2], p[1] / p[2]]
    };
    let mut src = Vec::new();
    let mut dst = Vec::new();
    while src.len() < 8 {
        let x = Vector3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(6.0..12.0),
        );
        let y = r * x + t;
        if y[2] < 1.0 {
            continue;
        }
        src.push(project(x));
        dst.push(project(y));
    }
    (f, src, dst)
}
