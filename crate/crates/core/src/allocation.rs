//! Power, feedback-bit and transmission-mode allocation.
//!
//! The three optimizers run in a single forward pass: power is split with
//! the accuracy that equal feedback would give, feedback bits are then
//! distributed against those cluster powers, and finally every feasible
//! `(N, K)` clustering is scored by its closed-form sum rate.

use alloc::vec::Vec;
#[cfg(not(any(test, feature = "std")))]
use num_traits::Float;

use crate::analytic::{closed_form_rates, RateParams};
use crate::channel::{csi_accuracy_fdd, validate_rho, CsiSpec, SystemGeometry};
use crate::link::PowerPlan;
use crate::{Error, Result, UserGrid};

/// `sum_{n != i} sum_k alpha_{n,k} (1 - rho_{n,k})`, the factor multiplying
/// the power of cluster `i` in the inter-cluster interference it causes.
pub fn interference_coefficient(i: usize, geometry: &SystemGeometry, rho: &UserGrid<f64>) -> f64 {
    geometry
        .alpha()
        .indexed()
        .filter(|((n, _), _)| *n != i)
        .map(|((n, k), a)| a * (1.0 - rho[(n, k)]))
        .sum()
}

/// `sum_i I_i P_i` for the given cluster powers.
pub fn total_interference(geometry: &SystemGeometry, rho: &UserGrid<f64>, cluster_powers: &[f64]) -> f64 {
    cluster_powers
        .iter()
        .enumerate()
        .map(|(i, p)| interference_coefficient(i, geometry, rho) * p)
        .sum()
}

fn check_power(total_power: f64) -> Result<()> {
    if total_power > 0.0 && total_power.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("total power must be positive and finite"))
    }
}

fn plan_from_clusters(geometry: &SystemGeometry, cluster_powers: &[f64], total_power: f64) -> Result<PowerPlan> {
    let k = geometry.users_per_cluster();
    let power = UserGrid::from_fn(geometry.clusters(), k, |n, _| cluster_powers[n] / k as f64);
    PowerPlan::new(power, total_power)
}

/// Cluster power shares proportional to `1 / I_i`, split equally inside each
/// cluster. Clusters with a zero coefficient take `P / N` each and the
/// others share the rest; with every coefficient zero the split is equal.
pub fn power_allocation(geometry: &SystemGeometry, rho: &UserGrid<f64>, total_power: f64) -> Result<PowerPlan> {
    check_power(total_power)?;
    validate_rho(rho)?;
    let n = geometry.clusters();
    let coeff: Vec<f64> = (0..n).map(|i| interference_coefficient(i, geometry, rho)).collect();
    let zero = coeff.iter().filter(|c| **c <= 0.0).count();
    let equal = total_power / n as f64;
    let cluster_powers: Vec<f64> = if zero == n {
        alloc::vec![equal; n]
    } else {
        let rest = total_power - equal * zero as f64;
        let inv_sum: f64 = coeff.iter().filter(|c| **c > 0.0).map(|c| 1.0 / c).sum();
        coeff
            .iter()
            .map(|&c| if c > 0.0 { rest / (c * inv_sum) } else { equal })
            .collect()
    };
    plan_from_clusters(geometry, &cluster_powers, total_power)
}

/// `P / (NK)` for every user.
pub fn equal_power(geometry: &SystemGeometry, total_power: f64) -> Result<PowerPlan> {
    check_power(total_power)?;
    let each = total_power / geometry.total_users() as f64;
    PowerPlan::new(UserGrid::filled(geometry.clusters(), geometry.users_per_cluster(), each), total_power)
}

/// Equal cluster totals split `strong : weak` inside two-user clusters.
pub fn fixed_ratio_power(geometry: &SystemGeometry, total_power: f64, strong: f64, weak: f64) -> Result<PowerPlan> {
    check_power(total_power)?;
    if geometry.users_per_cluster() != 2 {
        return Err(Error::UnsupportedMode("fixed-ratio power needs two users per cluster"));
    }
    if !(strong > 0.0) || !(weak > 0.0) {
        return Err(Error::Domain("ratio terms must be positive"));
    }
    let cluster = total_power / geometry.clusters() as f64;
    let share = [strong / (strong + weak), weak / (strong + weak)];
    let power = UserGrid::from_fn(geometry.clusters(), 2, |_, k| cluster * share[k]);
    PowerPlan::new(power, total_power)
}

/// The 1:4 baseline, with the larger share on the weaker user.
pub fn fixed_ratio_baseline(geometry: &SystemGeometry, total_power: f64) -> Result<PowerPlan> {
    fixed_ratio_power(geometry, total_power, 1.0, 4.0)
}

/// Integer feedback bits per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackPlan {
    pub bits: UserGrid<u32>,
    pub budget: u32,
}

impl FeedbackPlan {
    pub fn new(bits: UserGrid<u32>, budget: u32) -> Result<Self> {
        if bits.iter().map(|&b| u64::from(b)).sum::<u64>() > u64::from(budget) {
            return Err(Error::Domain("feedback bits exceed the budget"));
        }
        Ok(Self { bits, budget })
    }

    /// `B_tot / (NK)` for every user; the remainder goes to the lowest
    /// indices.
    pub fn equal(clusters: usize, users_per_cluster: usize, budget: u32) -> Self {
        let users = (clusters * users_per_cluster) as u32;
        let (q, r) = (budget / users, budget % users);
        let bits = (0..users).map(|u| q + u32::from(u < r)).collect();
        Self {
            bits: UserGrid::from_vec(clusters, users_per_cluster, bits).expect("shape"),
            budget,
        }
    }

    pub fn used(&self) -> u32 {
        self.bits.iter().sum()
    }

    pub fn as_real(&self) -> UserGrid<f64> {
        self.bits.map(|&b| f64::from(b))
    }

    /// CSI accuracy each user reaches with its bits.
    pub fn accuracies(&self, antennas: usize) -> Result<UserGrid<f64>> {
        CsiSpec::Fdd { bits: self.bits.clone() }.accuracies_for(antennas)
    }
}

impl CsiSpec {
    fn accuracies_for(&self, antennas: usize) -> Result<UserGrid<f64>> {
        match self {
            CsiSpec::Fdd { bits } => {
                let mut out = UserGrid::filled(bits.clusters(), bits.users_per_cluster(), 0.0);
                for ((n, k), &b) in bits.indexed() {
                    out[(n, k)] = csi_accuracy_fdd(f64::from(b), antennas)?;
                }
                Ok(out)
            }
            _ => Err(Error::Domain("not a feedback specification")),
        }
    }
}

/// `c_{n,k} = alpha_{n,k} sum_{l != n} P_l`, the interference each user
/// would see from the other clusters with no CSI at all.
pub fn leakage_weights(geometry: &SystemGeometry, cluster_powers: &[f64]) -> Result<UserGrid<f64>> {
    if cluster_powers.len() != geometry.clusters() {
        return Err(Error::Shape {
            expected: geometry.clusters(),
            got: cluster_powers.len(),
        });
    }
    let total: f64 = cluster_powers.iter().sum();
    Ok(geometry.alpha().indexed().fold(
        UserGrid::filled(geometry.clusters(), geometry.users_per_cluster(), 0.0),
        |mut g, ((n, k), a)| {
            g[(n, k)] = a * (total - cluster_powers[n]).max(0.0);
            g
        },
    ))
}

fn check_antennas(antennas: usize) -> Result<()> {
    if antennas < 2 {
        Err(Error::Domain("quantized feedback needs at least two antennas"))
    } else {
        Ok(())
    }
}

/// `sum_{n,k} c_{n,k} 2^{-B_{n,k} / (M - 1)}` for real-valued bits.
pub fn inter_cluster_objective(
    bits: &UserGrid<f64>,
    geometry: &SystemGeometry,
    cluster_powers: &[f64],
    antennas: usize,
) -> Result<f64> {
    check_antennas(antennas)?;
    let c = leakage_weights(geometry, cluster_powers)?;
    if !c.same_shape(bits) {
        return Err(Error::Shape {
            expected: c.len(),
            got: bits.len(),
        });
    }
    let d = antennas as f64 - 1.0;
    Ok(c.iter().zip(bits.iter()).map(|(c, b)| c * (-b / d).exp2()).sum())
}

/// `NK (prod c)^{1/NK} 2^{-B_tot / ((M - 1) NK)}`, the lower bound on the
/// objective over real allocations summing to `B_tot`.
pub fn am_gm_bound(geometry: &SystemGeometry, cluster_powers: &[f64], antennas: usize, budget: f64) -> Result<f64> {
    check_antennas(antennas)?;
    let c = leakage_weights(geometry, cluster_powers)?;
    let users = c.len() as f64;
    if c.iter().any(|&x| x <= 0.0) {
        return Ok(0.0);
    }
    let mean_log = c.iter().map(|x| x.log2()).sum::<f64>() / users;
    Ok(users * (mean_log - budget / ((antennas as f64 - 1.0) * users)).exp2())
}

/// Real-valued optimum of the objective under `sum B = B_tot`, `B >= 0`:
/// `B = B_tot / |S| + (M - 1) (log2 c - mean_S log2 c)` on the active set
/// `S`, which starts at all users with `c > 0` and drops users whose
/// solution goes negative.
pub fn relaxed_feedback_allocation(
    geometry: &SystemGeometry,
    cluster_powers: &[f64],
    antennas: usize,
    budget: f64,
) -> Result<UserGrid<f64>> {
    check_antennas(antennas)?;
    if !(budget >= 0.0) {
        return Err(Error::Domain("feedback budget must be non-negative"));
    }
    let c = leakage_weights(geometry, cluster_powers)?;
    let mut out = c.map(|_| 0.0);
    let mut active: Vec<usize> = (0..c.len()).filter(|&u| c.as_slice()[u] > 0.0).collect();
    if active.is_empty() {
        let each = budget / c.len() as f64;
        return Ok(out.map(|_| each));
    }
    let d = antennas as f64 - 1.0;
    let logs: Vec<f64> = c.iter().map(|x| if *x > 0.0 { x.log2() } else { 0.0 }).collect();
    let sol = loop {
        let mean = active.iter().map(|&u| logs[u]).sum::<f64>() / active.len() as f64;
        let share = budget / active.len() as f64;
        let sol: Vec<(usize, f64)> = active.iter().map(|&u| (u, share + d * (logs[u] - mean))).collect();
        if sol.iter().all(|(_, b)| *b >= 0.0) {
            break sol;
        }
        active = sol.iter().filter(|(_, b)| *b > 0.0).map(|(u, _)| *u).collect();
    };
    let (n, k) = (out.clusters(), out.users_per_cluster());
    let mut flat = out.into_vec();
    for (u, b) in sol {
        flat[u] = b;
    }
    out = UserGrid::from_vec(n, k, flat)?;
    Ok(out)
}

/// Integer feedback allocation.
///
/// The relaxed solution is floored, the leftover bits are handed out one by
/// one to the user whose objective term drops most, and single-bit moves
/// between users are applied while they still lower the objective. The
/// objective is separable and convex in each user's bits, so the result is
/// an exact integer optimum.
pub fn feedback_allocation(
    geometry: &SystemGeometry,
    cluster_powers: &[f64],
    antennas: usize,
    budget: u32,
) -> Result<FeedbackPlan> {
    let relaxed = relaxed_feedback_allocation(geometry, cluster_powers, antennas, f64::from(budget))?;
    let c = leakage_weights(geometry, cluster_powers)?;
    let (nc, kc) = (geometry.clusters(), geometry.users_per_cluster());
    if c.iter().all(|&x| x <= 0.0) {
        return Ok(FeedbackPlan::equal(nc, kc, budget));
    }
    let d = antennas as f64 - 1.0;
    let term = |u: usize, b: u32| c.as_slice()[u] * (-f64::from(b) / d).exp2();
    let mut bits: Vec<u32> = relaxed.iter().map(|b| (b + 1e-9).floor().max(0.0) as u32).collect();
    while bits.iter().sum::<u32>() > budget {
        // rounding guard; the floor never overshoots by more than a bit
        let u = (0..bits.len()).filter(|&u| bits[u] > 0).min_by(|&a, &b| penalty(a, &bits, &term).total_cmp(&penalty(b, &bits, &term))).expect("positive bits");
        bits[u] -= 1;
    }
    let mut left = budget - bits.iter().sum::<u32>();
    while left > 0 {
        let u = best_gain(&bits, &term);
        bits[u] += 1;
        left -= 1;
    }
    loop {
        let to = best_gain(&bits, &term);
        let from = (0..bits.len())
            .filter(|&u| u != to && bits[u] > 0)
            .min_by(|&a, &b| penalty(a, &bits, &term).total_cmp(&penalty(b, &bits, &term)));
        let Some(from) = from else { break };
        let gain = term(to, bits[to]) - term(to, bits[to] + 1);
        if gain - penalty(from, &bits, &term) <= 1e-12 * gain.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        bits[to] += 1;
        bits[from] -= 1;
    }
    FeedbackPlan::new(UserGrid::from_vec(nc, kc, bits)?, budget)
}

/// Objective increase caused by removing one bit from user `u`.
fn penalty(u: usize, bits: &[u32], term: &impl Fn(usize, u32) -> f64) -> f64 {
    term(u, bits[u] - 1) - term(u, bits[u])
}

/// User whose next bit lowers the objective most; lowest index on ties.
fn best_gain(bits: &[u32], term: &impl Fn(usize, u32) -> f64) -> usize {
    let mut best = 0;
    let mut best_gain = f64::NEG_INFINITY;
    for (u, &b) in bits.iter().enumerate() {
        let g = term(u, b) - term(u, b + 1);
        if g > best_gain {
            best = u;
            best_gain = g;
        }
    }
    best
}

/// A clustering of the user population into `N` beams of `K` users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransmissionMode {
    pub clusters: usize,
    pub users_per_cluster: usize,
}

impl TransmissionMode {
    pub fn new(clusters: usize, users_per_cluster: usize) -> Result<Self> {
        if clusters == 0 || users_per_cluster == 0 {
            return Err(Error::Domain("modes need at least one cluster and one user"));
        }
        Ok(Self {
            clusters,
            users_per_cluster,
        })
    }

    pub fn total_users(&self) -> usize {
        self.clusters * self.users_per_cluster
    }

    /// Zero-forcing needs `M >= (N - 1) K + 1`.
    pub fn is_feasible(&self, antennas: usize) -> bool {
        antennas >= (self.clusters - 1) * self.users_per_cluster + 1
    }
}

/// Feasible factorizations `N K = total_users`, by increasing `N`.
pub fn enumerate_modes(total_users: usize, antennas: usize) -> Vec<TransmissionMode> {
    (1..=total_users)
        .filter(|n| total_users.is_multiple_of(*n))
        .map(|n| TransmissionMode {
            clusters: n,
            users_per_cluster: total_users / n,
        })
        .filter(|m| m.is_feasible(antennas))
        .collect()
}

/// Re-clusters a user population: users are sorted by decreasing gain and
/// dealt round-robin into the `N` clusters, so every cluster mixes strong
/// and weak users.
pub fn round_robin_geometry(alpha: &[f64], mode: TransmissionMode, antennas: usize) -> Result<SystemGeometry> {
    if alpha.len() != mode.total_users() {
        return Err(Error::Shape {
            expected: mode.total_users(),
            got: alpha.len(),
        });
    }
    let mut sorted = alpha.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let grid = UserGrid::from_fn(mode.clusters, mode.users_per_cluster, |n, k| sorted[k * mode.clusters + n]);
    SystemGeometry::new(antennas, grid)
}

/// Closed-form sum rate.
pub fn closed_form_sum_rate(geometry: &SystemGeometry, rho: &UserGrid<f64>, plan: &PowerPlan) -> Result<f64> {
    Ok(closed_form_rates(&RateParams::from_plan(geometry, rho, plan)?)?.sum_rate)
}

/// Score of one candidate mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeScore {
    pub mode: TransmissionMode,
    pub sum_rate: f64,
}

/// Scores every feasible mode with `rate_fn(geometry, rho)`.
pub fn evaluate_modes<G, R, F>(
    total_users: usize,
    antennas: usize,
    geometry_builder: G,
    rho_builder: R,
    rate_fn: F,
) -> Result<Vec<ModeScore>>
where
    G: Fn(TransmissionMode) -> Result<SystemGeometry>,
    R: Fn(&SystemGeometry) -> Result<UserGrid<f64>>,
    F: Fn(&SystemGeometry, &UserGrid<f64>) -> Result<f64>,
{
    enumerate_modes(total_users, antennas)
        .into_iter()
        .map(|mode| {
            let g = geometry_builder(mode)?;
            let rho = rho_builder(&g)?;
            Ok(ModeScore {
                mode,
                sum_rate: rate_fn(&g, &rho)?,
            })
        })
        .collect()
}

/// Best score; ties within `1e-12` relative go to the smaller `K`.
pub fn best_mode(scores: &[ModeScore]) -> Result<ModeScore> {
    let mut best: Option<&ModeScore> = None;
    for s in scores {
        best = match best {
            Some(b) if s.sum_rate < b.sum_rate - 1e-12 * b.sum_rate.abs() => Some(b),
            Some(b) if s.sum_rate <= b.sum_rate + 1e-12 * b.sum_rate.abs() && s.mode.users_per_cluster >= b.mode.users_per_cluster => Some(b),
            _ => Some(s),
        };
    }
    best.cloned().ok_or(Error::NoFeasibleMode)
}

/// Mode with the highest sum rate under `rate_fn`.
pub fn select_mode<G, R, F>(
    total_users: usize,
    antennas: usize,
    geometry_builder: G,
    rho_builder: R,
    rate_fn: F,
) -> Result<ModeScore>
where
    G: Fn(TransmissionMode) -> Result<SystemGeometry>,
    R: Fn(&SystemGeometry) -> Result<UserGrid<f64>>,
    F: Fn(&SystemGeometry, &UserGrid<f64>) -> Result<f64>,
{
    best_mode(&evaluate_modes(total_users, antennas, geometry_builder, rho_builder, rate_fn)?)
}

/// How the CSI budget is spent.
#[derive(Debug, Clone, PartialEq)]
pub enum CsiBudget {
    /// Total feedback bits shared by all users (FDD).
    FeedbackBits(f64),
    /// Per-user pilot power with pilot length `tau` (TDD); no allocation.
    Pilot { tau: usize, pilot_power: f64 },
}

/// Output of [`joint_optimize`] for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPlan {
    pub mode: TransmissionMode,
    pub geometry: SystemGeometry,
    pub power: PowerPlan,
    pub feedback: Option<FeedbackPlan>,
    pub rho: UserGrid<f64>,
    pub sum_rate: f64,
}

/// Power, feedback and accuracy for one mode in a single forward pass.
pub fn joint_plan_for_mode(
    geometry: SystemGeometry,
    mode: TransmissionMode,
    budget: &CsiBudget,
    total_power: f64,
) -> Result<JointPlan> {
    let m = geometry.antennas();
    let (nc, kc) = (geometry.clusters(), geometry.users_per_cluster());
    let (power, feedback, rho) = match *budget {
        CsiBudget::FeedbackBits(total_bits) => {
            if !(total_bits >= 0.0) {
                return Err(Error::Domain("feedback budget must be non-negative"));
            }
            let equal_rho = if m >= 2 {
                csi_accuracy_fdd(total_bits / geometry.total_users() as f64, m)?
            } else {
                0.0
            };
            let power = power_allocation(&geometry, &UserGrid::filled(nc, kc, equal_rho), total_power)?;
            let plan = if m >= 2 {
                feedback_allocation(&geometry, &power.cluster_powers(), m, total_bits.floor() as u32)?
            } else {
                FeedbackPlan::equal(nc, kc, total_bits.floor() as u32)
            };
            let rho = if m >= 2 { plan.accuracies(m)? } else { UserGrid::filled(nc, kc, 0.0) };
            (power, Some(plan), rho)
        }
        CsiBudget::Pilot { tau, pilot_power } => {
            let spec = CsiSpec::Tdd {
                tau,
                pilot_power: UserGrid::filled(nc, kc, pilot_power),
            };
            let rho = spec.accuracies(&geometry)?;
            (power_allocation(&geometry, &rho, total_power)?, None, rho)
        }
    };
    let sum_rate = closed_form_sum_rate(&geometry, &rho, &power)?;
    Ok(JointPlan {
        mode,
        geometry,
        power,
        feedback,
        rho,
        sum_rate,
    })
}

/// Runs power allocation, feedback allocation and closed-form scoring for
/// every feasible mode and returns all bundles plus the index of the best.
pub fn joint_candidates<G>(
    total_users: usize,
    antennas: usize,
    geometry_builder: G,
    budget: &CsiBudget,
    total_power: f64,
) -> Result<(Vec<JointPlan>, usize)>
where
    G: Fn(TransmissionMode) -> Result<SystemGeometry>,
{
    let plans = enumerate_modes(total_users, antennas)
        .into_iter()
        .map(|mode| joint_plan_for_mode(geometry_builder(mode)?, mode, budget, total_power))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<ModeScore> = plans
        .iter()
        .map(|p| ModeScore {
            mode: p.mode,
            sum_rate: p.sum_rate,
        })
        .collect();
    let best = best_mode(&scores)?;
    let idx = plans.iter().position(|p| p.mode == best.mode).expect("present");
    Ok((plans, idx))
}

/// Best joint bundle over all feasible modes.
pub fn joint_optimize<G>(
    total_users: usize,
    antennas: usize,
    geometry_builder: G,
    budget: &CsiBudget,
    total_power: f64,
) -> Result<JointPlan>
where
    G: Fn(TransmissionMode) -> Result<SystemGeometry>,
{
    let (mut plans, idx) = joint_candidates(total_users, antennas, geometry_builder, budget, total_power)?;
    Ok(plans.swap_remove(idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{table1_alpha, table1_rho};
    use approx::assert_relative_eq;

    #[test]
    fn table1_coefficients_and_shares() {
        let g = SystemGeometry::table1();
        let rho = table1_rho();
        let coeff: Vec<f64> = (0..3).map(|i| interference_coefficient(i, &g, &rho)).collect();
        assert_relative_eq!(coeff[0], 0.4025, max_relative = 1e-12);
        assert_relative_eq!(coeff[1], 0.34, max_relative = 1e-12);
        assert_relative_eq!(coeff[2], 0.3225, max_relative = 1e-12);
        let plan = power_allocation(&g, &rho, 10.0).unwrap();
        let shares = [0.291_385_008_885_714_7, 0.344_948_429_636_765_25, 0.363_666_561_477_519_97];
        for (n, s) in shares.iter().enumerate() {
            assert_relative_eq!(plan.power[(n, 0)], 5.0 * s, max_relative = 1e-12);
            assert_eq!(plan.power[(n, 0)], plan.power[(n, 1)]);
        }
        assert_relative_eq!(plan.total(), 10.0, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_coefficients() {
        let g = SystemGeometry::table1();
        let plan = power_allocation(&g, &UserGrid::filled(3, 2, 1.0), 6.0).unwrap();
        assert!(plan.power.iter().all(|p| (p - 1.0).abs() < 1e-15));
        let single = SystemGeometry::new(2, UserGrid::from_rows(alloc::vec![alloc::vec![1.0, 0.5]]).unwrap()).unwrap();
        let plan = power_allocation(&single, &UserGrid::filled(1, 2, 0.3), 4.0).unwrap();
        assert_eq!(plan.power.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn fixed_ratio_split() {
        let g = SystemGeometry::table1();
        let p = fixed_ratio_baseline(&g, 30.0).unwrap();
        assert_relative_eq!(p.power[(1, 0)], 2.0, max_relative = 1e-14);
        assert_relative_eq!(p.power[(1, 1)], 8.0, max_relative = 1e-14);
        let three = SystemGeometry::new(6, UserGrid::filled(2, 3, 1.0)).unwrap();
        assert!(matches!(fixed_ratio_baseline(&three, 1.0), Err(Error::UnsupportedMode(_))));
    }

    #[test]
    fn symmetric_feedback_is_equal() {
        let g = SystemGeometry::new(6, UserGrid::filled(3, 2, 0.5)).unwrap();
        let plan = feedback_allocation(&g, &[2.0, 2.0, 2.0], 6, 12).unwrap();
        assert!(plan.bits.iter().all(|&b| b == 2));
    }

    #[test]
    fn feedback_budget_respected() {
        let g = SystemGeometry::table1();
        for budget in [0, 1, 7, 12, 40] {
            let plan = feedback_allocation(&g, &[1.0, 3.0, 2.0], 6, budget).unwrap();
            assert_eq!(plan.used(), budget);
        }
    }

    #[test]
    fn single_user_gets_everything() {
        let g = SystemGeometry::new(1, UserGrid::filled(1, 1, 1.0)).unwrap();
        let j = joint_optimize(1, 1, |_| Ok(g.clone()), &CsiBudget::FeedbackBits(9.0), 5.0).unwrap();
        assert_eq!(j.power.power.as_slice(), &[5.0]);
        assert_eq!(j.feedback.unwrap().bits.as_slice(), &[9]);
    }

    #[test]
    fn relaxed_meets_bound() {
        let g = SystemGeometry::table1();
        let pw = [1.0, 2.0, 1.5];
        let b = relaxed_feedback_allocation(&g, &pw, 6, 120.0).unwrap();
        assert!(b.iter().all(|x| *x > 0.0));
        assert_relative_eq!(b.sum(), 120.0, max_relative = 1e-12);
        let obj = inter_cluster_objective(&b, &g, &pw, 6).unwrap();
        assert_relative_eq!(obj, am_gm_bound(&g, &pw, 6, 120.0).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn active_set_drops_negative_users() {
        let g = SystemGeometry::new(3, UserGrid::from_rows(alloc::vec![alloc::vec![1.0], alloc::vec![1e-6]]).unwrap()).unwrap();
        let b = relaxed_feedback_allocation(&g, &[1.0, 1.0], 3, 4.0).unwrap();
        assert_eq!(b[(1, 0)], 0.0);
        assert_relative_eq!(b[(0, 0)], 4.0, max_relative = 1e-12);
    }

    #[test]
    fn modes() {
        let m6: Vec<_> = enumerate_modes(6, 6).iter().map(|m| (m.clusters, m.users_per_cluster)).collect();
        assert_eq!(m6, alloc::vec![(1, 6), (2, 3), (3, 2), (6, 1)]);
        let m4: Vec<_> = enumerate_modes(6, 4).iter().map(|m| (m.clusters, m.users_per_cluster)).collect();
        assert_eq!(m4, alloc::vec![(1, 6), (2, 3)]);
        assert_eq!(enumerate_modes(1, 1).len(), 1);
    }

    #[test]
    fn round_robin_dealing() {
        let alpha: Vec<f64> = table1_alpha().iter().copied().collect();
        let g = round_robin_geometry(&alpha, TransmissionMode::new(3, 2).unwrap(), 6).unwrap();
        assert_eq!(g.alpha().cluster(0), &[1.0, 0.2]);
        assert_eq!(g.alpha().cluster(2), &[0.9, 0.1]);
    }

    #[test]
    fn tie_break_prefers_small_k() {
        let s = [
            ModeScore { mode: TransmissionMode::new(1, 2).unwrap(), sum_rate: 3.0 },
            ModeScore { mode: TransmissionMode::new(2, 1).unwrap(), sum_rate: 3.0 },
        ];
        assert_eq!(best_mode(&s).unwrap().mode.users_per_cluster, 1);
        assert!(matches!(best_mode(&[]), Err(Error::NoFeasibleMode)));
    }
}
