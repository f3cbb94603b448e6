//! Closed-form and asymptotic average rates.
//!
//! For user `(n, k)` the SIC rate is `E[log2(1 + W)] - E[log2(1 + V)]`,
//! where `W` (signal plus interference) and `V` (interference only) are
//! weighted sums of unit exponentials whose scales are produced by
//! [`eta_params`] and [`beta_params`]. All rates are in b/s/Hz.

use alloc::vec::Vec;
use core::f64::consts::LN_2;
#[cfg(not(any(test, feature = "std")))]
use num_traits::Float;

use crate::channel::{validate_rho, SystemGeometry};
use crate::link::{PowerPlan, RateReport, RateSource};
use crate::mixture::{avg_log_term, ErlangMixture};
use crate::special::{mean_log1p_exponential, EULER_GAMMA};
use crate::{Error, Result, UserGrid};

/// Everything the rate expressions depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParams {
    pub alpha: UserGrid<f64>,
    pub rho: UserGrid<f64>,
    /// Power fractions `theta[n][k]`, summing to one.
    pub theta: UserGrid<f64>,
    pub total_power: f64,
}

impl RateParams {
    pub fn new(alpha: UserGrid<f64>, rho: UserGrid<f64>, theta: UserGrid<f64>, total_power: f64) -> Result<Self> {
        if !alpha.same_shape(&rho) || !alpha.same_shape(&theta) {
            return Err(Error::Shape {
                expected: alpha.len(),
                got: rho.len().min(theta.len()),
            });
        }
        validate_rho(&rho)?;
        if !(total_power > 0.0) {
            return Err(Error::Domain("total power must be positive"));
        }
        if theta.iter().any(|t| !(*t > 0.0)) || (theta.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("power fractions must be positive and sum to one"));
        }
        Ok(Self {
            alpha,
            rho,
            theta,
            total_power,
        })
    }

    pub fn from_plan(geometry: &SystemGeometry, rho: &UserGrid<f64>, plan: &PowerPlan) -> Result<Self> {
        let total = plan.power.sum();
        Self::new(
            geometry.alpha().clone(),
            rho.clone(),
            plan.power.map(|p| p / total),
            total,
        )
    }

    pub fn clusters(&self) -> usize {
        self.alpha.clusters()
    }

    pub fn users_per_cluster(&self) -> usize {
        self.alpha.users_per_cluster()
    }

    fn power(&self, n: usize, k: usize) -> f64 {
        self.theta[(n, k)] * self.total_power
    }

    fn check(&self, n: usize, k: usize) -> Result<()> {
        if n < self.clusters() && k < self.users_per_cluster() {
            Ok(())
        } else {
            Err(Error::Domain("user index out of range"))
        }
    }
}

/// Shared branch rule of the signal-side and interference-side scale lists.
/// `own` is the summed own-cluster fraction, `fraction_scale` multiplies
/// every fraction (the total power for rates, one for asymptotic forms).
fn scale_list(p: &RateParams, n: usize, k: usize, own_terms: usize, keep_own: bool, fraction_scale: f64) -> Vec<f64> {
    let a = p.alpha[(n, k)];
    let leak = a * (1.0 - p.rho[(n, k)]);
    (0..p.clusters())
        .filter_map(|q| {
            if q == n {
                keep_own.then(|| a * p.theta.cluster(n)[..own_terms].iter().sum::<f64>() * fraction_scale)
            } else {
                Some(leak * p.theta.cluster_sum(q) * fraction_scale)
            }
        })
        .collect()
}

/// Scales of `W` for user `(n, k)`: `alpha sum_{j<=k} P_{n,j}` for the own
/// cluster and `alpha (1 - rho) P_q` for every other cluster `q`.
pub fn eta_params(n: usize, k: usize, params: &RateParams) -> Result<Vec<f64>> {
    params.check(n, k)?;
    Ok(scale_list(params, n, k, k + 1, true, params.total_power))
}

/// Scales of `V` for user `(n, k)`. For `k > 0` the own-cluster entry is
/// `alpha sum_{j<k} P_{n,j}`; for the strongest user it is absent and the
/// list holds the `N - 1` other clusters in order.
pub fn beta_params(n: usize, k: usize, params: &RateParams) -> Result<Vec<f64>> {
    params.check(n, k)?;
    Ok(scale_list(params, n, k, k, k > 0, params.total_power))
}

/// Exact average rate of user `(n, k)`.
pub fn avg_rate(n: usize, k: usize, params: &RateParams) -> Result<f64> {
    let w = avg_log_term(&eta_params(n, k, params)?)?;
    let v = avg_log_term(&beta_params(n, k, params)?)?;
    Ok((w - v).max(0.0))
}

/// Exact rates of every user.
pub fn closed_form_rates(params: &RateParams) -> Result<RateReport> {
    let mut rate = UserGrid::filled(params.clusters(), params.users_per_cluster(), 0.0);
    for n in 0..params.clusters() {
        for k in 0..params.users_per_cluster() {
            rate[(n, k)] = avg_rate(n, k, params)?;
        }
    }
    Ok(RateReport::analytic(rate, RateSource::ClosedForm))
}

/// High-power limit of the rate of user `(n, k)`; independent of the total
/// power. Infinite for a strongest user with perfect CSI, whose rate grows
/// without bound.
pub fn asymptotic_rate_interference_limited(n: usize, k: usize, params: &RateParams) -> Result<f64> {
    params.check(n, k)?;
    let omega = ErlangMixture::from_scales(&scale_list(params, n, k, k + 1, true, 1.0))?;
    let psi = ErlangMixture::from_scales(&scale_list(params, n, k, k, k > 0, 1.0))?;
    if psi.is_point_mass() {
        return Ok(f64::INFINITY);
    }
    Ok((omega.weighted_log_scale() - psi.weighted_log_scale()) / LN_2)
}

/// Interference-limited rates of every user.
pub fn asymptotic_rates(params: &RateParams) -> Result<RateReport> {
    let mut rate = UserGrid::filled(params.clusters(), params.users_per_cluster(), 0.0);
    for n in 0..params.clusters() {
        for k in 0..params.users_per_cluster() {
            rate[(n, k)] = asymptotic_rate_interference_limited(n, k, params)?;
        }
    }
    Ok(RateReport::analytic(rate, RateSource::Asymptotic))
}

/// Other clusters' power fractions, in cluster order without `n`.
fn other_cluster_fractions(params: &RateParams, n: usize) -> Vec<f64> {
    (0..params.clusters())
        .filter(|&q| q != n)
        .map(|q| params.theta.cluster_sum(q))
        .collect()
}

fn first_user_checks(n: usize, params: &RateParams) -> Result<ErlangMixture> {
    params.check(n, 0)?;
    if params.clusters() < 2 {
        return Err(Error::Domain("rate loss needs inter-cluster interference (N >= 2)"));
    }
    ErlangMixture::from_scales(&other_cluster_fractions(params, n))
}

/// Perfect-CSI high-power rate of the strongest user of cluster `n`:
/// `log2(alpha P theta) - C / ln 2`.
pub fn ideal_rate_first(n: usize, params: &RateParams) -> Result<f64> {
    params.check(n, 0)?;
    Ok((params.alpha[(n, 0)] * params.power(n, 0)).log2() - EULER_GAMMA / LN_2)
}

/// Rate lost by the strongest user of cluster `n` to residual inter-cluster
/// interference at high power.
pub fn rate_loss_first(n: usize, params: &RateParams) -> Result<f64> {
    let mu = first_user_checks(n, params)?;
    let rho = params.rho[(n, 0)];
    if rho >= 1.0 {
        return Err(Error::Domain("rate loss is undefined for perfect CSI"));
    }
    let lead = (params.alpha[(n, 0)] * (1.0 - rho) * params.total_power).log2();
    Ok(lead - (EULER_GAMMA - mu.weighted_log_scale()) / LN_2)
}

/// `ideal_rate_first - rate_loss_first`.
pub fn approx_rate_first(n: usize, params: &RateParams) -> Result<f64> {
    Ok(ideal_rate_first(n, params)? - rate_loss_first(n, params)?)
}

/// Direct form of the approximation:
/// `-log2(1 - rho) + log2(theta) - sum_i Xi_i log2(mu_i)`.
pub fn approx_rate_first_direct(n: usize, params: &RateParams) -> Result<f64> {
    let mu = first_user_checks(n, params)?;
    let rho = params.rho[(n, 0)];
    if rho >= 1.0 {
        return Err(Error::Domain("approximation is undefined for perfect CSI"));
    }
    Ok(-(1.0 - rho).log2() + params.theta[(n, 0)].log2() - mu.weighted_log_scale() / LN_2)
}

/// The approximation with quantized-feedback accuracy substituted:
/// `B / (M - 1) + log2(theta) - sum_i Xi_i log2(mu_i)`. Linear in `bits`.
pub fn approx_rate_first_feedback(n: usize, params: &RateParams, bits: f64, antennas: usize) -> Result<f64> {
    let mu = first_user_checks(n, params)?;
    if antennas < 2 {
        return Err(Error::Domain("quantized feedback needs at least two antennas"));
    }
    Ok(bits / (antennas as f64 - 1.0) + params.theta[(n, 0)].log2() - mu.weighted_log_scale() / LN_2)
}

/// Interference-free rate `-(1/ln 2) e^{1/(p alpha)} Ei(-1/(p alpha))`.
pub fn noise_limited_rate(power: f64, alpha: f64) -> Result<f64> {
    let snr = power * alpha;
    if !(snr > 0.0) {
        return Err(Error::Domain("p * alpha must be positive"));
    }
    Ok(mean_log1p_exponential(snr) / LN_2)
}

/// CSI resources that keep `(1 - rho) P_tot` at `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiScaling {
    /// Pilot power for TDD estimation.
    pub pilot_power: f64,
    /// Feedback bits for FDD quantization, before integer rounding.
    pub feedback_bits: f64,
}

pub fn csi_scaling_for_constant_gap(
    epsilon: f64,
    total_power: f64,
    alpha: f64,
    tau: f64,
    antennas: usize,
) -> Result<CsiScaling> {
    if !(epsilon > 0.0) || epsilon >= total_power {
        return Err(Error::Domain("epsilon must lie in (0, P_tot)"));
    }
    if !(alpha > 0.0) || !(tau > 0.0) || antennas < 2 {
        return Err(Error::Domain("alpha, tau must be positive and M >= 2"));
    }
    let ratio = total_power / epsilon;
    Ok(CsiScaling {
        pilot_power: (ratio - 1.0) / (alpha * tau),
        feedback_bits: (antennas as f64 - 1.0) * ratio.log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{csi_accuracy_fdd, csi_accuracy_tdd, table1_alpha, table1_rho};
    use approx::assert_relative_eq;

    fn table1_equal(total: f64) -> RateParams {
        RateParams::new(table1_alpha(), table1_rho(), UserGrid::filled(3, 2, 1.0 / 6.0), total).unwrap()
    }

    #[test]
    fn single_cluster_lists() {
        let alpha = UserGrid::from_rows(alloc::vec![alloc::vec![0.8, 0.4]]).unwrap();
        let rho = UserGrid::filled(1, 2, 0.5);
        let theta = UserGrid::from_rows(alloc::vec![alloc::vec![0.25, 0.75]]).unwrap();
        let p = RateParams::new(alpha, rho, theta, 8.0).unwrap();
        assert_eq!(eta_params(0, 1, &p).unwrap(), alloc::vec![0.4 * 8.0]);
        assert_eq!(beta_params(0, 1, &p).unwrap(), alloc::vec![0.4 * 2.0]);
        assert!(beta_params(0, 0, &p).unwrap().is_empty());
    }

    #[test]
    fn table1_scale_lists() {
        let p = table1_equal(6.0); // one unit of power per user
        let eta = eta_params(0, 1, &p).unwrap();
        assert_relative_eq!(eta[0], 0.20, max_relative = 1e-14);
        assert_relative_eq!(eta[1], 0.06, max_relative = 1e-14);
        assert_relative_eq!(eta[2], 0.06, max_relative = 1e-14);
        let beta = beta_params(1, 0, &p).unwrap();
        assert_eq!(beta.len(), 2);
        assert_relative_eq!(beta[0], 0.95 * 0.15 * 2.0, max_relative = 1e-14);
    }

    #[test]
    fn perfect_csi_single_user_is_noise_limited() {
        let p = RateParams::new(
            UserGrid::filled(1, 1, 1.0),
            UserGrid::filled(1, 1, 1.0),
            UserGrid::filled(1, 1, 1.0),
            3.0,
        )
        .unwrap();
        assert_relative_eq!(avg_rate(0, 0, &p).unwrap(), noise_limited_rate(3.0, 1.0).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn asymptote_is_power_free() {
        let a = asymptotic_rate_interference_limited(0, 1, &table1_equal(1e3)).unwrap();
        let b = asymptotic_rate_interference_limited(0, 1, &table1_equal(1e6)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn perfect_csi_second_user_ceiling() {
        let p = RateParams::new(table1_alpha(), UserGrid::filled(3, 2, 1.0), UserGrid::filled(3, 2, 1.0 / 6.0), 1e4)
            .unwrap();
        assert_relative_eq!(asymptotic_rate_interference_limited(2, 1, &p).unwrap(), 1.0, max_relative = 1e-12);
        assert!(asymptotic_rate_interference_limited(2, 0, &p).unwrap().is_infinite());
    }

    #[test]
    fn ideal_rate_constant() {
        let p = RateParams::new(UserGrid::filled(2, 1, 1.0), UserGrid::filled(2, 1, 0.5), UserGrid::filled(2, 1, 0.5), 2.0)
            .unwrap();
        // alpha P theta = 1
        assert_relative_eq!(ideal_rate_first(0, &p).unwrap(), -0.832_746_177_276_857, max_relative = 1e-12);
    }

    #[test]
    fn rate_loss_needs_two_clusters() {
        let p = RateParams::new(UserGrid::filled(1, 2, 1.0), UserGrid::filled(1, 2, 0.5), UserGrid::filled(1, 2, 0.5), 2.0)
            .unwrap();
        assert!(rate_loss_first(0, &p).is_err());
    }

    #[test]
    fn approx_forms_agree() {
        for rho in [0.7, 0.8, 0.9] {
            let p = RateParams::new(table1_alpha(), UserGrid::filled(3, 2, rho), UserGrid::filled(3, 2, 1.0 / 6.0), 1e4)
                .unwrap();
            for n in 0..3 {
                let a = approx_rate_first(n, &p).unwrap();
                let b = approx_rate_first_direct(n, &p).unwrap();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_limited_values() {
        assert_relative_eq!(noise_limited_rate(1.0, 1.0).unwrap(), 0.860_347_382_270_886, max_relative = 1e-13);
        assert!(noise_limited_rate(1e-9, 1.0).unwrap() < 2e-9);
        assert!(noise_limited_rate(0.0, 1.0).is_err());
    }

    #[test]
    fn constant_gap_scaling() {
        let s = csi_scaling_for_constant_gap(1.0, 100.0, 1.0, 20.0, 6).unwrap();
        assert_relative_eq!(s.pilot_power, 4.95, max_relative = 1e-14);
        assert_relative_eq!(s.feedback_bits, 33.219_280_948_873_62, max_relative = 1e-13);
        let rho = csi_accuracy_tdd(20.0, s.pilot_power, 1.0).unwrap();
        assert_relative_eq!((1.0 - rho) * 100.0, 1.0, max_relative = 1e-12);
        let rho = csi_accuracy_fdd(s.feedback_bits, 6).unwrap();
        assert_relative_eq!((1.0 - rho) * 100.0, 1.0, max_relative = 1e-12);
        assert!(csi_scaling_for_constant_gap(100.0, 100.0, 1.0, 20.0, 6).is_err());
    }
}
