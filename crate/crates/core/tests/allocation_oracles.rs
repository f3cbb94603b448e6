mod common;

use noma_core::allocation::*;
use noma_core::channel::{csi_accuracy_fdd, table1_alpha, table1_rho, SystemGeometry};
use noma_core::UserGrid;
use proptest::prelude::*;
use rand::Rng;

fn two_cluster(r: &mut impl Rng) -> SystemGeometry {
    let alpha = UserGrid::from_fn(2, 1, |_, _| r.random_range(0.05..1.0));
    SystemGeometry::new(3, alpha).unwrap()
}

#[test]
fn integer_feedback_matches_exhaustive_search() {
    let mut r = common::rng(31);
    for _ in 0..50 {
        let g = two_cluster(&mut r);
        let powers = [r.random_range(0.5..5.0), r.random_range(0.5..5.0)];
        let c: Vec<f64> = leakage_weights(&g, &powers).unwrap().iter().copied().collect();
        for budget in 0..=12 {
            let plan = feedback_allocation(&g, &powers, 3, budget).unwrap();
            let obj = inter_cluster_objective(&plan.as_real(), &g, &powers, 3).unwrap();
            let (_, best) = common::brute_force_bits(&c, 2.0, budget);
            assert!(obj <= best * (1.0 + 1e-12), "budget {budget}: {obj} vs {best}");
        }
    }
}

#[test]
fn four_user_instances_match_exhaustive_search() {
    let mut r = common::rng(32);
    for _ in 0..20 {
        let alpha = UserGrid::from_fn(2, 2, |_, k| if k == 0 { r.random_range(0.5..1.0) } else { r.random_range(0.05..0.5) });
        let g = SystemGeometry::new(3, alpha).unwrap();
        let powers = [r.random_range(0.5..5.0), r.random_range(0.5..5.0)];
        let c: Vec<f64> = leakage_weights(&g, &powers).unwrap().iter().copied().collect();
        for budget in [3, 7, 12] {
            let plan = feedback_allocation(&g, &powers, 3, budget).unwrap();
            let obj = inter_cluster_objective(&plan.as_real(), &g, &powers, 3).unwrap();
            let (_, best) = common::brute_force_bits(&c, 2.0, budget);
            assert!(obj <= best * (1.0 + 1e-12));
        }
    }
}

#[test]
fn relaxed_plan_attains_am_gm_bound() {
    let mut r = common::rng(33);
    for _ in 0..50 {
        let g = two_cluster(&mut r);
        let powers = [r.random_range(0.5..5.0), r.random_range(0.5..5.0)];
        // large enough that no user is clamped at zero
        let budget = 40.0;
        let b = relaxed_feedback_allocation(&g, &powers, 3, budget).unwrap();
        assert!(b.iter().all(|x| *x > 0.0));
        let obj = inter_cluster_objective(&b, &g, &powers, 3).unwrap();
        let bound = am_gm_bound(&g, &powers, 3, budget).unwrap();
        assert!((obj - bound).abs() <= 1e-9 * bound);
    }
}

#[test]
fn objective_limits() {
    let g = SystemGeometry::table1();
    let powers = [1.0, 2.0, 3.0];
    let zero = inter_cluster_objective(&UserGrid::filled(3, 2, 0.0), &g, &powers, 6).unwrap();
    let want: f64 = table1_alpha().indexed().map(|((n, _), a)| a * (6.0 - powers[n])).sum();
    assert!((zero - want).abs() < 1e-12);
    let huge = inter_cluster_objective(&UserGrid::filled(3, 2, 5000.0), &g, &powers, 6).unwrap();
    assert!(huge < 1e-200);
}

#[test]
fn interference_coefficient_depends_on_cluster_totals_only() {
    let g = SystemGeometry::table1();
    let rho = table1_rho();
    let before = total_interference(&g, &rho, &[2.0, 3.0, 1.0]);
    // any split inside a cluster leaves the cluster total, and so I_i, unchanged
    let plan = noma_core::link::PowerPlan::new(UserGrid::from_rows(vec![vec![0.5, 1.5], vec![2.9, 0.1], vec![0.3, 0.7]]).unwrap(), 6.0).unwrap();
    let after = total_interference(&g, &rho, &plan.cluster_powers());
    assert_eq!(before, after);
}

#[test]
fn table1_power_shares() {
    let g = SystemGeometry::table1();
    let plan = power_allocation(&g, &table1_rho(), 1.0).unwrap();
    let want = [0.291_385_008_885_714_7, 0.344_948_429_636_765_25, 0.363_666_561_477_519_97];
    for (n, w) in want.iter().enumerate() {
        assert!((plan.power.cluster_sum(n) - w).abs() < 1e-12);
    }
}

#[test]
fn default_budget_is_two_bits_per_user() {
    // B_tot = -N K (M - 1) log2(1 - rho) with two bits each
    let rho = csi_accuracy_fdd(2.0, 6).unwrap();
    let b_tot = -6.0 * 5.0 * (1.0 - rho).log2();
    assert!((b_tot - 12.0).abs() < 1e-12);
    let g = SystemGeometry::new(6, UserGrid::filled(3, 2, 0.7)).unwrap();
    let plan = feedback_allocation(&g, &[1.0, 1.0, 1.0], 6, 12).unwrap();
    assert!(plan.bits.iter().all(|&b| b == 2));
}

#[test]
fn mode_selection_extremes() {
    let mut r = common::rng(34);
    for _ in 0..100 {
        let alpha: Vec<f64> = (0..6).map(|_| r.random_range(0.05..1.0)).collect();
        for (rho, want) in [(0.0, (1, 6)), (1.0, (6, 1))] {
            let best = select_mode(
                6,
                6,
                |m| round_robin_geometry(&alpha, m, 6),
                |g| Ok(UserGrid::filled(g.clusters(), g.users_per_cluster(), rho)),
                |g, rho| closed_form_sum_rate(g, rho, &equal_power(g, 10.0)?),
            )
            .unwrap();
            assert_eq!((best.mode.clusters, best.mode.users_per_cluster), want);
        }
    }
}

#[test]
fn joint_beats_fixed_scheme_in_closed_form() {
    let alpha: Vec<f64> = table1_alpha().iter().copied().collect();
    for rho in [0.6_f64, 0.8, 0.9] {
        let budget = -30.0 * (1.0 - rho).log2();
        let j = joint_optimize(6, 6, |m| round_robin_geometry(&alpha, m, 6), &CsiBudget::FeedbackBits(budget), 10.0).unwrap();
        let g = round_robin_geometry(&alpha, TransmissionMode::new(3, 2).unwrap(), 6).unwrap();
        let fixed = closed_form_sum_rate(&g, &UserGrid::filled(3, 2, rho), &equal_power(&g, 10.0).unwrap()).unwrap();
        assert!(j.sum_rate >= fixed);
        assert!(j.feedback.unwrap().used() <= budget.floor() as u32);
    }
}

proptest! {
    #[test]
    fn budgets_are_conserved(
        alpha in prop::collection::vec(0.01f64..1.0, 6),
        rho in prop::collection::vec(0.0f64..1.0, 6),
        total in 0.01f64..1e5,
        bits in 0u32..200,
    ) {
        let mut a = alpha.clone();
        for c in a.chunks_mut(2) {
            c.sort_by(|x, y| y.total_cmp(x));
        }
        let g = SystemGeometry::new(6, UserGrid::from_vec(3, 2, a).unwrap()).unwrap();
        let rho = UserGrid::from_vec(3, 2, rho).unwrap();
        for plan in [power_allocation(&g, &rho, total).unwrap(), equal_power(&g, total).unwrap(), fixed_ratio_baseline(&g, total).unwrap()] {
            prop_assert!((plan.total() - total).abs() <= 1e-12 * total);
            prop_assert!(plan.power.iter().all(|p| *p > 0.0));
        }
        let plan = power_allocation(&g, &rho, total).unwrap();
        let fb = feedback_allocation(&g, &plan.cluster_powers(), 6, bits).unwrap();
        prop_assert_eq!(fb.used(), bits);
    }
}
