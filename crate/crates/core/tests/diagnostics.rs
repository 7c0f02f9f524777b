mod common;

use common::random_matrix;
use proptest::prelude::*;
use sgcl_core::diagnostics::{alignment_stats, eigen_alignment_residual, pearson_offdiag, ts_simulate, TsDynamicsConfig};
use sgcl_core::predictor::{center_and_normalize, inferential_predictor};
use sgcl_core::{seeded_rng, DenseMatrix, SgclError};

fn scale_rows(h: &DenseMatrix, factors: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] * factors[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mean_cosine_ignores_positive_scaling(a in 1e-3f64..1e3, b in 1e-3f64..1e3, seed: u64) {
        let mut rng = seeded_rng(seed);
        let h1 = random_matrix(20, 6, &mut rng);
        let h2 = random_matrix(20, 6, &mut rng);
        let base = alignment_stats(&h1, &h2).unwrap();
        let scaled = alignment_stats(&h1.scale(a), &h2.scale(b)).unwrap();
        prop_assert!((base.s_bar - scaled.s_bar).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&scaled.s_bar));
        prop_assert!(scaled.d_bar >= 0.0);
    }

    #[test]
    fn row_correlation_ignores_per_row_affine_maps(seed: u64) {
        let mut rng = seeded_rng(seed);
        let h = random_matrix(15, 5, &mut rng);
        let alpha: Vec<f64> = (0..15).map(|_| rng.random_range(0.1..10.0)).collect();
        let beta: Vec<f64> = (0..15).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mapped = DenseMatrix::from_fn(15, 5, |i, j| alpha[i] * h[(i, j)] + beta[i]);
        let a = pearson_offdiag(&h, 512, &mut seeded_rng(0)).unwrap();
        let b = pearson_offdiag(&mapped, 512, &mut seeded_rng(0)).unwrap();
        prop_assert!(a.matrix.max_abs_diff(&b.matrix) < 1e-10);
        prop_assert!((a.mean_abs_offdiag - b.mean_abs_offdiag).abs() < 1e-12);
    }

    #[test]
    fn eigen_residual_ignores_row_scale(seed: u64) {
        let mut rng = seeded_rng(seed);
        let p = inferential_predictor(&center_and_normalize(&random_matrix(30, 4, &mut rng)).unwrap().rows).unwrap();
        let h = random_matrix(10, 4, &mut rng);
        let factors: Vec<f64> = (0..10).map(|_| rng.random_range(0.01..100.0)).collect();
        let a = eigen_alignment_residual(&p, &h).unwrap();
        let b = eigen_alignment_residual(&p, &scale_rows(&h, &factors)).unwrap();
        for (x, y) in a.per_node.iter().zip(&b.per_node) {
            let ((l1, r1), (l2, r2)) = (x.unwrap(), y.unwrap());
            prop_assert!((l1 - l2).abs() < 1e-10 && (r1 - r2).abs() < 1e-10);
        }
    }
}

#[test]
fn eigenvector_rows_have_zero_residual() {
    let mut rng = seeded_rng(5);
    let p = inferential_predictor(&center_and_normalize(&random_matrix(50, 5, &mut rng)).unwrap().rows).unwrap();
    let (values, vectors) = sgcl_core::diagnostics::symmetric_spectrum(p.values());
    let rows = vectors.transpose();
    let r = eigen_alignment_residual(&p, &rows).unwrap();
    for (k, node) in r.per_node.iter().enumerate() {
        let (lambda, resid) = node.unwrap();
        assert!(resid < 1e-12, "{resid}");
        assert!((lambda - values[k]).abs() < 1e-12);
    }
}

/// Rows `±e_k`, giving `Σ = 2/(2d − 1) · I`.
fn isotropic(d: usize) -> DenseMatrix {
    DenseMatrix::from_fn(2 * d, d, |i, j| match (i % d == j, i < d) {
        (true, true) => 1.0,
        (true, false) => -1.0,
        _ => 0.0,
    })
}

#[test]
fn isotropic_input_reaches_the_teacher() {
    let d = 4;
    let t = ts_simulate(&isotropic(d), &TsDynamicsConfig::default()).unwrap();
    assert!(t.last().rel_distance < 1e-6, "{}", t.last().rel_distance);
    let s = 2.0 / (2 * d - 1) as f64;
    assert!(t.teacher_spectrum.iter().all(|v| (v - s).abs() < 1e-12));
}

#[test]
fn oversized_learning_rate_diverges() {
    // each mode follows s ← s (1 + lr (ŝ − s))², which escapes once lr ŝ is large
    let h = isotropic(4);
    let cfg = TsDynamicsConfig {
        learning_rate: 10.0 * TsDynamicsConfig::default().learning_rate,
        ..TsDynamicsConfig::default()
    };
    assert!(matches!(ts_simulate(&h, &cfg), Err(SgclError::Divergence { .. })));
}
