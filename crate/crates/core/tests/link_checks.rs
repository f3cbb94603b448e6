use noma_core::allocation::equal_power;
use noma_core::analytic::{closed_form_rates, noise_limited_rate, RateParams};
use noma_core::channel::*;
use noma_core::link::*;
use noma_core::{snr_db_to_power, UserGrid};

#[test]
fn single_user_perfect_csi_matches_noise_limited_rate() {
    let g = SystemGeometry::new(1, UserGrid::filled(1, 1, 1.0)).unwrap();
    for p in [0.5, 3.0, 40.0] {
        let plan = PowerPlan::new(UserGrid::filled(1, 1, p), p).unwrap();
        let r = monte_carlo_rates(&g, &CsiSpec::Direct { rho: UserGrid::filled(1, 1, 1.0) }, &plan, 100_000, 5).unwrap();
        let want = noise_limited_rate(p, 1.0).unwrap();
        assert!((r.rate[(0, 0)] - want).abs() < 0.01 * want);
    }
}

#[test]
fn tdma_isotropy_without_csi() {
    let g = SystemGeometry::new(4, UserGrid::filled(1, 1, 1.0)).unwrap();
    let r = tdma_mrt_baseline(&g, &CsiSpec::Direct { rho: UserGrid::filled(1, 1, 0.0) }, 2.0, 100_000, 3).unwrap();
    let want = noise_limited_rate(2.0, 1.0).unwrap();
    assert!((r.rate[(0, 0)] - want).abs() < 3.0 * r.stderr.unwrap()[(0, 0)] + 1e-3);
}

#[test]
fn tdma_perfect_csi_uses_full_array_gain() {
    // |h^H h / |h||^2 = |h|^2 ~ Gamma(M, 1)
    let g = SystemGeometry::new(3, UserGrid::filled(1, 1, 1.0)).unwrap();
    let r = tdma_mrt_baseline(&g, &CsiSpec::Direct { rho: UserGrid::filled(1, 1, 1.0) }, 1.0, 50_000, 3).unwrap();
    let want = noma_core::mixture::avg_log_term(&[1.0, 1.0, 1.0]).unwrap();
    assert!((r.rate[(0, 0)] - want).abs() < 4.0 * r.stderr.unwrap()[(0, 0)]);
}

#[test]
fn sum_rate_grows_and_saturates() {
    let g = SystemGeometry::table1();
    let csi = CsiSpec::Direct { rho: table1_rho() };
    let plans: Vec<_> = [0.0, 20.0, 40.0, 50.0].iter().map(|s| equal_power(&g, snr_db_to_power(*s)).unwrap()).collect();
    let r = monte_carlo_sweep(&g, &csi, &plans, 20_000, 1).unwrap();
    assert!(r[1].sum_rate >= r[0].sum_rate);
    assert!(r[3].sum_rate - r[2].sum_rate <= 0.05);
    for x in &r {
        assert!(x.order_violation_frac < 0.5);
        assert!(x.order_violation_frac > 0.0);
        assert!((x.sum_rate - x.rate.sum()).abs() < 1e-12);
    }
}

#[test]
fn low_power_agrees_with_closed_form() {
    let g = SystemGeometry::table1();
    let rho = table1_rho();
    let plan = equal_power(&g, snr_db_to_power(0.0)).unwrap();
    let mc = monte_carlo_rates(&g, &CsiSpec::Direct { rho: rho.clone() }, &plan, 40_000, 2).unwrap();
    let cf = closed_form_rates(&RateParams::from_plan(&g, &rho, &plan).unwrap()).unwrap();
    for (a, b) in mc.rate.iter().zip(cf.rate.iter()) {
        assert!((a - b).abs() <= (0.02 * b).max(0.05));
    }
}

#[test]
fn fdd_spec_feeds_accuracy() {
    let g = SystemGeometry::table1();
    let spec = CsiSpec::Fdd { bits: UserGrid::filled(3, 2, 2) };
    let rho = spec.accuracies(&g).unwrap();
    assert!(rho.iter().all(|r| (r - 0.242_141_716_744_8).abs() < 1e-12));
}
