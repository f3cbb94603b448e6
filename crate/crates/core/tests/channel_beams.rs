mod common;

use noma_core::beamforming::*;
use noma_core::channel::*;
use noma_core::cmat::{inner, norm};
use noma_core::{UserGrid, C64};
use rand::Rng;

#[test]
fn forward_model_is_exact() {
    let g = SystemGeometry::table1();
    let rho = table1_rho();
    for t in 0..50 {
        let d = draw_channels(&g, &rho, 8, t).unwrap();
        for ((n, k), h) in d.h.indexed() {
            let r = rho[(n, k)];
            for ((x, y), z) in h.iter().zip(&d.h_hat[(n, k)]).zip(&d.e[(n, k)]) {
                assert!((x - (y * r.sqrt() + z * (1.0 - r).sqrt())).norm() < 1e-15);
            }
        }
    }
}

#[test]
fn null_space_dimension_matches_svd_rank() {
    let mut r = common::rng(21);
    for _ in 0..200 {
        let m = r.random_range(2..8);
        let rows = r.random_range(1..m);
        let mut a: Vec<Vec<C64>> = (0..rows)
            .map(|_| (0..m).map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect())
            .collect();
        if rows > 1 && r.random_bool(0.3) {
            // rank-deficient: duplicate a scaled row
            let copy: Vec<C64> = a[0].iter().map(|z| z * 2.5).collect();
            a[rows - 1] = copy;
        }
        let refs: Vec<&[C64]> = a.iter().map(Vec::as_slice).collect();
        let basis = null_space_basis(&noma_core::cmat::CMatrix::from_rows(m, &refs), NULL_SPACE_RTOL).unwrap();
        assert_eq!(basis.len(), m - common::svd_rank(&a, m));
        for v in &basis {
            assert!((norm(v) - 1.0).abs() < 1e-12);
            for row in &a {
                let s: C64 = row.iter().zip(v).map(|(x, y)| x * y).sum();
                assert!(s.norm() < 1e-9 * norm(row));
            }
        }
    }
}

#[test]
fn zf_beams_cancel_estimated_interference() {
    let g = SystemGeometry::table1();
    let rho = table1_rho();
    for t in 0..200 {
        let d = draw_channels(&g, &rho, 4, t).unwrap();
        let beams = zf_beams(&d.h_hat, &g, BeamWeights::Uniform).unwrap();
        assert_eq!(beams.null_dim, 2);
        for (i, w) in beams.beams.iter().enumerate() {
            assert!((norm(w) - 1.0).abs() < 1e-12);
            for ((n, _), est) in d.h_hat.indexed() {
                if n != i {
                    assert!(inner(est, w).norm() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn perfect_csi_removes_true_interference() {
    let g = SystemGeometry::table1();
    let d = draw_channels(&g, &UserGrid::filled(3, 2, 1.0), 4, 0).unwrap();
    let beams = zf_beams(&d.h_hat, &g, BeamWeights::Uniform).unwrap();
    for ((n, _), h) in d.h.indexed() {
        for (i, w) in beams.beams.iter().enumerate() {
            if i != n {
                assert!(inner(h, w).norm() <= 1e-9);
            }
        }
    }
}

#[test]
fn infeasible_geometry_is_rejected() {
    let alpha = UserGrid::filled(3, 2, 1.0);
    assert!(matches!(SystemGeometry::new(4, alpha), Err(noma_core::Error::InfeasibleGeometry { .. })));
}

#[test]
fn pilot_estimation_reaches_model_accuracy() {
    let g = SystemGeometry::table1();
    let pilot = UserGrid::filled(3, 2, 0.5);
    let tau = 8;
    let est = simulate_pilot_estimation(&g, tau, &pilot, 4000, 2).unwrap();
    let model = CsiSpec::Tdd { tau, pilot_power: pilot }.accuracies(&g).unwrap();
    for (a, b) in est.empirical_rho.iter().zip(model.iter()) {
        assert!((a - b).abs() < 0.02, "{a} vs {b}");
    }
}

#[test]
fn short_pilots_are_rejected() {
    let g = SystemGeometry::table1();
    assert!(simulate_pilot_estimation(&g, 6, &UserGrid::filled(3, 2, 1.0), 1, 0).is_err());
}

#[test]
fn rvq_distortion_follows_model() {
    for (m, bits) in [(6, 2), (4, 4), (3, 6)] {
        let got = rvq_mean_distortion(m, bits, 20_000, 3).unwrap();
        let model = 1.0 - csi_accuracy_fdd(f64::from(bits), m).unwrap();
        assert!(((got - model) / model).abs() < 0.15, "M={m} B={bits}: {got} vs {model}");
    }
}
