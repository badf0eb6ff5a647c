mod common;

use common::{brute_force_subset, random_basis};
use moseg::fusion::{
    build_subset_constraints, cluster_concatenated, fuse_coregularization, fuse_kernel_addition,
    fuse_subset_constrained, per_view_corrected_labeling, summed_kernel, trace_csv, FusionOptions, ViewSet,
};
use moseg::geometry::ModelKind;
use moseg::ork::AffinityMatrix;
use moseg::seed::rng_from_seed;
use moseg::spectral::{cluster_kmeans, embed, normalized_laplacian, trace_form};
use moseg::synth::classification_error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Noisy block kernel: strong links inside blocks, weak random links
/// across.
fn noisy_blocks(seed: u64, labels: &[usize], cross: f64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let n = labels.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = if labels[i] == labels[j] {
                rng.random_range(0.5..1.0)
            } else {
                rng.random_range(0.0..cross)
            };
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn view_set(seed: u64, labels: [&[usize]; 3], cross: f64, m: usize) -> ViewSet {
    let kernels = ModelKind::ALL
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(v, (&kind, l))| AffinityMatrix::new(Some(kind), noisy_blocks(seed * 3 + v as u64, l, cross)))
        .collect();
    ViewSet::new(kernels, m).unwrap()
}

fn labels(n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|i| i * m / n).collect()
}

fn opts() -> FusionOptions {
    FusionOptions {
        seed: 9,
        ..FusionOptions::default()
    }
}

#[test]
fn laplacian_null_space_counts_components() {
    let truth = labels(24, 3);
    let k = DMatrix::from_fn(24, 24, |i, j| f64::from(truth[i] == truth[j]));
    let l = normalized_laplacian(&AffinityMatrix::new(None, k)).unwrap();
    let e = embed(&l, 4, None).unwrap();
    assert!(e.eigenvalues[..3].iter().all(|v| v.abs() < 1e-12));
    assert!(e.eigenvalues[3] > 0.5);
    let labeling = cluster_kmeans(&e.basis.columns(0, 3).into_owned(), 3, 5, 1).unwrap();
    assert_eq!(classification_error(&labeling.labels, &truth).unwrap(), 0.0);
}

#[test]
fn embedding_is_orthonormal_with_sign_convention() {
    let truth = labels(30, 3);
    let l = normalized_laplacian(&AffinityMatrix::new(None, noisy_blocks(4, &truth, 0.2))).unwrap();
    let e = embed(&l, 3, None).unwrap();
    let gram = e.basis.transpose() * &e.basis;
    assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);
    assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    for c in 0..3 {
        let col = e.basis.column(c);
        assert!(col[col.iamax()] > 0.0);
    }
    let eigsum: f64 = e.eigenvalues.iter().sum();
    assert!((trace_form(&e.basis, &l) - eigsum).abs() < 1e-10);
}

#[test]
fn kmeans_separates_blobs() {
    let mut rng = rng_from_seed(2);
    let centers = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let truth: Vec<usize> = (0..90).map(|i| i % 3).collect();
    let u = DMatrix::from_fn(90, 3, |i, c| centers[truth[i]][c] + rng.random_range(-0.1..0.1));
    let a = cluster_kmeans(&u, 3, 10, 5).unwrap();
    let b = cluster_kmeans(&u, 3, 10, 5).unwrap();
    assert_eq!(a, b);
    assert!(!a.degenerate);
    assert_eq!(classification_error(&a.labels, &truth).unwrap(), 0.0);
}

#[test]
fn kmeans_flags_more_clusters_than_points() {
    let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    assert!(cluster_kmeans(&u, 3, 2, 0).unwrap().degenerate);
}

#[test]
fn kernel_addition_recovers_shared_blocks() {
    let truth = labels(30, 2);
    let views = view_set(1, [&truth, &truth, &truth], 0.3, 2);
    let (labeling, emb) = fuse_kernel_addition(&views, true, &opts()).unwrap();
    assert_eq!(classification_error(&labeling.labels, &truth).unwrap(), 0.0);
    assert_eq!(emb.view, None);
    let sum = summed_kernel(&views, false);
    let want = &views.kernels[0].values + &views.kernels[1].values + &views.kernels[2].values;
    assert!((sum.values - want).amax() < 1e-12);
    assert!((summed_kernel(&views, true).max_entry() - 3.0).abs() < 1e-12);
}

#[test]
fn identical_views_objective() {
    // U_v^T U_v = I, so every cross term contributes M at initialization
    let truth = labels(20, 2);
    let k = AffinityMatrix::new(None, noisy_blocks(7, &truth, 0.3));
    let views = ViewSet::new(vec![k.clone(), k.clone(), k], 2).unwrap();
    let lambda = 0.05;
    let r = fuse_coregularization(&views, lambda, &opts()).unwrap();
    let eigsum: f64 = views.embeddings[0].eigenvalues.iter().sum();
    let want = 3.0 * eigsum - lambda * 3.0 * 2.0 * 2.0;
    assert!((r.trace[0].total - want).abs() < 1e-10);
    // already optimal: nothing moves
    for row in &r.trace {
        assert!((row.total - want).abs() < 1e-9);
    }
    assert!(r.converged);
}

#[test]
fn zero_lambda_decouples_views() {
    let truth = labels(24, 3);
    let other = labels(24, 2);
    let views = view_set(3, [&truth, &other, &truth], 0.4, 3);
    let r = fuse_coregularization(&views, 0.0, &opts()).unwrap();
    for (fused, single) in r.embeddings.iter().zip(&views.embeddings) {
        assert!((fused.projector() - single.projector()).amax() < 1e-8);
    }
}

#[test]
fn trace_csv_has_one_row_per_step() {
    let truth = labels(16, 2);
    let views = view_set(5, [&truth, &truth, &truth], 0.4, 2);
    let r = fuse_coregularization(&views, 1e-2, &opts()).unwrap();
    let csv = trace_csv(&r.trace);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,sweep,view,trace_affine,trace_homography,trace_fundamental,coupling,total"
    );
    assert_eq!(lines.count(), 1 + 3 * r.sweeps);
}

#[test]
fn coregularization_rejects_negative_lambda() {
    let truth = labels(10, 2);
    let views = view_set(6, [&truth, &truth, &truth], 0.2, 2);
    assert!(fuse_coregularization(&views, -1.0, &opts()).is_err());
    assert!(fuse_subset_constrained(&views, f64::NAN, &opts()).is_err());
}

#[test]
fn corrected_view_uses_its_own_embedding() {
    let truth = labels(30, 2);
    let views = view_set(8, [&truth, &truth, &truth], 0.3, 2);
    let r = fuse_coregularization(&views, 1e-2, &opts()).unwrap();
    let c = per_view_corrected_labeling(&r.embeddings, ModelKind::Fundamental, 2, 10, 1).unwrap();
    let direct = cluster_kmeans(&r.embeddings[2].basis, 2, 10, 1).unwrap();
    assert_eq!(c, direct);
    assert!(per_view_corrected_labeling(&[], ModelKind::Affine, 2, 10, 1).is_err());
}

#[test]
fn zero_gamma_matches_concatenated_single_views() {
    let truth = labels(27, 3);
    let views = view_set(10, [&truth, &labels(27, 2), &truth], 0.35, 3);
    let o = opts();
    let r = fuse_subset_constrained(&views, 0.0, &o).unwrap();
    let direct = cluster_concatenated(&views.embeddings, 3, o.restarts, o.seed).unwrap();
    assert_eq!(r.labeling, direct);
    assert!(r.converged);
}

#[test]
fn subset_constraints_match_entrywise_definition() {
    for seed in 0..20u64 {
        let n = 3 + (seed as usize % 8);
        let m = 1 + (seed as usize % 3).min(n - 1);
        let bases = [
            random_basis(seed * 3, n, m),
            random_basis(seed * 3 + 1, n, m),
            random_basis(seed * 3 + 2, n, m),
        ];
        let fast = build_subset_constraints(&[&bases[0], &bases[1], &bases[2]]).unwrap();
        let slow = brute_force_subset([&bases[0], &bases[1], &bases[2]]);
        for v in 0..3 {
            assert!((&fast[v] - &slow[v]).amax() < 1e-12, "seed {seed} view {v}");
        }
    }
    assert!(build_subset_constraints(&[]).is_err());
}

fn random_kernel(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = if rng.random_bool(0.5) {
                rng.random_range(0.0..1.0)
            } else {
                0.0
            };
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coregularization_objective_never_increases(
        seed in any::<u64>(),
        n in 6usize..25,
        m in 2usize..4,
        lambda in prop::sample::select(vec![1e-3, 1e-2, 1e-1, 0.5]),
    ) {
        let mut rng = rng_from_seed(seed);
        let kernels = ModelKind::ALL
            .iter()
            .map(|&k| AffinityMatrix::new(Some(k), random_kernel(&mut rng, n)))
            .collect();
        let views = ViewSet::new(kernels, m).unwrap();
        let r = fuse_coregularization(&views, lambda, &FusionOptions { max_iters: 15, ..opts() }).unwrap();
        for w in r.trace.windows(2) {
            prop_assert!(w[1].total <= w[0].total + 1e-10, "{} -> {}", w[0].total, w[1].total);
        }
    }

    #[test]
    fn subset_constraints_have_fixed_signs(seed in any::<u64>(), n in 2usize..12, m in 1usize..4) {
        let m = m.min(n);
        let b: Vec<DMatrix<f64>> = (0..3).map(|v| random_basis(seed.wrapping_add(v), n, m)).collect();
        let q = build_subset_constraints(&[&b[0], &b[1], &b[2]]).unwrap();
        prop_assert!(q[0].iter().all(|&x| (-1.0..=0.0).contains(&x)));
        prop_assert!(q[2].iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!(q[1].iter().all(|&x| (-1.0..=1.0).contains(&x)));
        for qv in &q {
            prop_assert!((qv - qv.transpose()).amax() < 1e-12);
        }
    }
}
