mod common;

use common::{apply, canonical, epipolar_pair, image_point, max_abs_diff, random_homography};
use moseg::geometry::{
    fit_affine, fit_fundamental, fit_homography, hartley_normalize, sampson_residual, ModelKind, Point,
};
use moseg::seed::rng_from_seed;
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn homography_recovers_generator() {
    let mut rng = rng_from_seed(11);
    for _ in 0..100 {
        let h = random_homography(&mut rng);
        let src: Vec<Point> = (0..4).map(|_| image_point(&mut rng)).collect();
        let dst: Vec<Point> = src.iter().map(|&p| apply(&h, p)).collect();
        let fit = fit_homography(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            assert!(sampson_residual(ModelKind::Homography, &fit, *s, *d) < 1e-9);
        }
        assert!(max_abs_diff(&canonical(&fit), &canonical(&h)) < 1e-5);
    }
}

#[test]
fn affine_recovers_generator() {
    let mut rng = rng_from_seed(12);
    for _ in 0..100 {
        let mut a = random_homography(&mut rng);
        a[(2, 0)] = 0.0;
        a[(2, 1)] = 0.0;
        let src: Vec<Point> = (0..3).map(|_| image_point(&mut rng)).collect();
        let dst: Vec<Point> = src.iter().map(|&p| apply(&a, p)).collect();
        let fit = fit_affine(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            assert!(sampson_residual(ModelKind::Affine, &fit, *s, *d) < 1e-9);
        }
        assert!(max_abs_diff(&fit, &a) < 1e-6);
    }
}

#[test]
fn fundamental_recovers_generator() {
    let mut rng = rng_from_seed(13);
    for _ in 0..100 {
        let (f, src, dst) = epipolar_pair(&mut rng);
        let fit = fit_fundamental(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            assert!(sampson_residual(ModelKind::Fundamental, &fit.linear, *s, *d) < 1e-9);
        }
        assert!(max_abs_diff(&canonical(&fit.matrix), &canonical(&f)) < 1e-5);
        assert!(fit.matrix.determinant().abs() < 1e-12);
    }
}

#[test]
fn fundamental_is_rank_two_on_noisy_points() {
    let mut rng = rng_from_seed(14);
    let (_, src, mut dst) = epipolar_pair(&mut rng);
    for p in &mut dst {
        p[0] += rng.random_range(-1.0..1.0);
        p[1] += rng.random_range(-1.0..1.0);
    }
    let fit = fit_fundamental(&src, &dst).unwrap();
    let sv = fit.matrix.singular_values();
    assert!(sv.min() < 1e-12 * sv.max());
    assert!((fit.matrix.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn collinear_samples_are_rejected() {
    let line: Vec<Point> = (0..8).map(|i| [i as f64, 2.0 * i as f64 + 1.0]).collect();
    let other: Vec<Point> = (0..8).map(|i| [i as f64 * 1.5, (i * i) as f64]).collect();
    assert!(fit_affine(&line[..3], &other[..3]).is_err());
    assert!(fit_homography(&line[..4], &other[..4]).is_err());
    assert!(fit_fundamental(&line, &other).is_err());
}

#[test]
fn normalization_is_centred_with_rms_sqrt2() {
    let mut rng = rng_from_seed(15);
    let pts: Vec<Point> = (0..20).map(|_| image_point(&mut rng)).collect();
    let (t, norm) = hartley_normalize(&pts).unwrap();
    let n = norm.len() as f64;
    let cx: f64 = norm.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy: f64 = norm.iter().map(|p| p[1]).sum::<f64>() / n;
    let rms = (norm.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() / n).sqrt();
    assert!(cx.abs() < 1e-12 && cy.abs() < 1e-12);
    assert!((rms - 2f64.sqrt()).abs() < 1e-12);
    for (p, q) in pts.iter().zip(&norm) {
        let r = apply(&t, *p);
        assert!((r[0] - q[0]).abs() < 1e-12 && (r[1] - q[1]).abs() < 1e-12);
    }
}

#[test]
fn transfer_residual_hand_value() {
    // identity map, one pixel off in x: e = (0, -1), J J^T = 2 I
    let r = sampson_residual(ModelKind::Homography, &Matrix3::identity(), [0.0, 0.0], [1.0, 0.0]);
    assert!((r - 0.5).abs() < 1e-15);
}

/// Similarity of the plane: scale, rotation, translation.
fn similarity(s: f64, theta: f64, tx: f64, ty: f64) -> Matrix3<f64> {
    let (sn, cs) = theta.sin_cos();
    Matrix3::new(s * cs, -s * sn, tx, s * sn, s * cs, ty, 0.0, 0.0, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fits_commute_with_similarities(
        seed in any::<u64>(),
        s in 0.2f64..5.0,
        theta in -3.0f64..3.0,
        tx in -500.0f64..500.0,
        ty in -500.0f64..500.0,
    ) {
        let mut rng = rng_from_seed(seed);
        let (_, src, mut dst) = epipolar_pair(&mut rng);
        for p in &mut dst {
            p[0] += rng.random_range(-0.5..0.5);
            p[1] += rng.random_range(-0.5..0.5);
        }
        let probe_src = image_point(&mut rng);
        let probe_dst = image_point(&mut rng);
        let sim = similarity(s, theta, tx, ty);
        let src2: Vec<Point> = src.iter().map(|&p| apply(&sim, p)).collect();
        let dst2: Vec<Point> = dst.iter().map(|&p| apply(&sim, p)).collect();
        let (ps2, pd2) = (apply(&sim, probe_src), apply(&sim, probe_dst));

        for kind in ModelKind::ALL {
            let n = kind.sample_size();
            let fit = |a: &[Point], b: &[Point]| match kind {
                ModelKind::Affine => fit_affine(a, b),
                ModelKind::Homography => fit_homography(a, b),
                ModelKind::Fundamental => fit_fundamental(a, b).map(|f| f.matrix),
            };
            let (m1, m2) = match (fit(&src[..n], &dst[..n]), fit(&src2[..n], &dst2[..n])) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            let r1 = sampson_residual(kind, &m1, probe_src, probe_dst);
            let r2 = sampson_residual(kind, &m2, ps2, pd2);
            prop_assert!(
                (r2 - s * s * r1).abs() <= 1e-6 * (s * s * r1).max(1e-9),
                "{kind}: {r2} vs {}", s * s * r1
            );
        }
    }
}
