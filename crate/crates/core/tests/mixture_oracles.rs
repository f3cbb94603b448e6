mod common;

use approx::assert_relative_eq;
use noma_core::analytic::{beta_params, eta_params, RateParams};
use noma_core::mixture::{avg_log_term, mixture_weights, ErlangMixture};
use noma_core::UserGrid;
use rand::Rng;

fn random_params(r: &mut impl Rng) -> RateParams {
    let n = r.random_range(1..=4);
    let k = r.random_range(1..=3);
    let alpha = UserGrid::from_fn(n, k, |_, j| 1.0 / (1.0 + j as f64) * r.random_range(0.05..1.0));
    let rho = UserGrid::from_fn(n, k, |_, _| r.random_range(0.0..1.0));
    let raw = UserGrid::from_fn(n, k, |_, _| r.random_range(0.1..1.0));
    let s = raw.sum();
    RateParams::new(alpha, rho, raw.map(|x| x / s), 10f64.powf(r.random_range(-1.0..5.0))).unwrap()
}

#[test]
fn weights_sum_to_one_on_random_configs() {
    let mut r = common::rng(11);
    let (mut checked, mut flagged) = (0, 0);
    for _ in 0..1000 {
        let p = random_params(&mut r);
        for n in 0..p.clusters() {
            for k in 0..p.users_per_cluster() {
                for scales in [eta_params(n, k, &p).unwrap(), beta_params(n, k, &p).unwrap()] {
                    let m = ErlangMixture::from_scales(&scales).unwrap();
                    if m.ill_conditioned {
                        flagged += 1;
                    } else if !m.is_point_mass() {
                        checked += 1;
                        assert!((m.weight_sum() - 1.0).abs() < 1e-9, "{scales:?}");
                    }
                }
            }
        }
    }
    assert!(flagged * 50 < checked, "{flagged} flagged of {checked}");
}

#[test]
fn scale_lists_match_independent_definition() {
    let mut r = common::rng(12);
    for _ in 0..200 {
        let p = random_params(&mut r);
        let power = p.theta.map(|t| t * p.total_power);
        for n in 0..p.clusters() {
            for k in 0..p.users_per_cluster() {
                let (eta, beta) = common::scale_lists(&p.alpha, &p.rho, &power, n, k);
                for (a, b) in eta_params(n, k, &p).unwrap().iter().zip(&eta) {
                    assert_relative_eq!(*a, *b, max_relative = 1e-12);
                }
                let got = beta_params(n, k, &p).unwrap();
                assert_eq!(got.len(), beta.len());
                for (a, b) in got.iter().zip(&beta) {
                    assert_relative_eq!(*a, *b, max_relative = 1e-12);
                }
            }
        }
    }
}

#[test]
fn pdf_integrates_to_one_and_is_non_negative() {
    for scales in [vec![2.0, 1.0], vec![3.0, 0.5, 1.7], vec![0.2, 0.06, 0.06], vec![1.0, 1.0, 1.0, 1.0, 1.0], vec![4.0, 0.9, 0.3, 2.2]] {
        let m = ErlangMixture::from_scales(&scales).unwrap();
        let top = 50.0 * m.max_scale();
        let steps = 5000;
        for i in 0..=steps {
            let x = top * i as f64 / steps as f64;
            assert!(m.pdf(x) >= -1e-12, "{scales:?} at {x}");
        }
        let area = common::simpson(&|x| m.pdf(x), 0.0, top, 1e-12);
        assert!((area - 1.0).abs() < 1e-7, "{scales:?}: {area}");
    }
}

#[test]
fn cdf_matches_sampled_sums() {
    let mut r = common::rng(13);
    for trial in 0..3 {
        let scales: Vec<f64> = (0..3).map(|_| r.random_range(0.1..3.0)).collect();
        let m = ErlangMixture::from_scales(&scales).unwrap();
        let mut s = common::weighted_exp_samples(&scales, 1_000_000, 100 + trial);
        s.sort_by(f64::total_cmp);
        let mean: f64 = scales.iter().sum();
        for i in 1..=10 {
            let x = mean * 0.3 * i as f64;
            assert!((m.cdf(x) - common::empirical_cdf(&s, x)).abs() < 0.005, "{scales:?} at {x}");
        }
    }
}

#[test]
fn pairwise_weights_partial_fraction_oracle() {
    // 2X1 + X2 has density e^{-x/2} - e^{-x} = 2 g(x; 2) - g(x; 1)
    let w = mixture_weights(&[2.0, 1.0]).unwrap();
    assert_eq!(w.weights.len(), 2);
    assert_relative_eq!(w.weights[0], 2.0, max_relative = 1e-15);
    assert_relative_eq!(w.weights[1], -1.0, max_relative = 1e-15);
    let w = mixture_weights(&[5.0]).unwrap();
    assert_eq!(w.weights, vec![1.0]);
}

#[test]
fn avg_log_term_matches_sampled_sums() {
    let mut r = common::rng(14);
    let mut sets = vec![vec![2.0, 1.0]];
    for q in 1..=4 {
        sets.push((0..q).map(|_| r.random_range(0.05..20.0)).collect());
    }
    for (i, scales) in sets.iter().enumerate() {
        let s = common::weighted_exp_samples(scales, 1_000_000, 200 + i as u64);
        let mc = s.iter().map(|w| (1.0 + w).log2()).sum::<f64>() / s.len() as f64;
        let cf = avg_log_term(scales).unwrap();
        assert!(((cf - mc) / mc).abs() < 0.005, "{scales:?}: {cf} vs {mc}");
    }
}

#[test]
fn avg_log_term_references() {
    assert_relative_eq!(avg_log_term(&[1.0]).unwrap(), 0.860_347_382_270_886, max_relative = 1e-13);
    assert_eq!(avg_log_term(&[0.0]).unwrap(), 0.0);
    assert_eq!(avg_log_term(&[]).unwrap(), 0.0);
    // 2 T(2) - T(1) with T(eta) = e^{1/eta} E1(1/eta) / ln 2
    assert_relative_eq!(avg_log_term(&[2.0, 1.0]).unwrap(), 1.802_609_803_065_063_3, max_relative = 1e-12);
}

#[test]
fn avg_log_term_is_monotone() {
    let base = [0.7, 0.2, 1.3];
    let v0 = avg_log_term(&base).unwrap();
    for i in 0..3 {
        let mut s = base;
        s[i] *= 1.05;
        assert!(avg_log_term(&s).unwrap() > v0);
    }
}

#[test]
fn ties_are_the_limit_of_distinct_scales() {
    let tied = avg_log_term(&[0.2, 0.06, 0.06]).unwrap();
    let near = avg_log_term(&[0.2, 0.06 * (1.0 + 1e-4), 0.06 * (1.0 - 1e-4)]).unwrap();
    assert!((tied - near).abs() < 1e-6);
    let five = avg_log_term(&[0.3; 5]).unwrap();
    let s = common::weighted_exp_samples(&[0.3; 5], 1_000_000, 300);
    let mc = s.iter().map(|w| (1.0 + w).log2()).sum::<f64>() / s.len() as f64;
    assert!(((five - mc) / mc).abs() < 0.005);
}
