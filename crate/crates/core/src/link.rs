//! Link-level Monte Carlo engine.
//!
//! Every trial draws all channels, builds zero-forcing beams from the
//! estimates and evaluates the SIC SINR of each user with unit noise power.
//! Trials are grouped in fixed chunks of [`CHUNK_TRIALS`]; a chunk's result
//! depends only on the seed and its trial range, and chunks are merged in
//! index order, so any parallel schedule reproduces the sequential result
//! bit for bit.

use alloc::vec::Vec;
use core::ops::Range;
#[cfg(not(any(test, feature = "std")))]
use num_traits::Float;

use crate::beamforming::{zf_beams, BeamSet, BeamWeights};
use crate::channel::{draw_channels, ChannelDraw, CsiSpec, SystemGeometry};
use crate::cmat::{inner, norm};
use crate::{Error, Result, UserGrid};

/// Trials per deterministic work unit.
pub const CHUNK_TRIALS: u64 = 4096;

/// Per-user transmit powers with their budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPlan {
    pub power: UserGrid<f64>,
    pub budget: f64,
}

impl PowerPlan {
    pub fn new(power: UserGrid<f64>, budget: f64) -> Result<Self> {
        if power.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Domain("every user needs positive finite power"));
        }
        if !(budget > 0.0) || power.sum() > budget * (1.0 + 1e-12) {
            return Err(Error::Domain("powers exceed the budget"));
        }
        Ok(Self { power, budget })
    }

    /// Total power of each cluster.
    pub fn cluster_powers(&self) -> Vec<f64> {
        (0..self.power.clusters()).map(|n| self.power.cluster_sum(n)).collect()
    }

    pub fn total(&self) -> f64 {
        self.power.sum()
    }
}

/// Origin of the numbers in a [`RateReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateSource {
    MonteCarlo,
    ClosedForm,
    Asymptotic,
}

impl RateSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RateSource::MonteCarlo => "monte-carlo",
            RateSource::ClosedForm => "closed-form",
            RateSource::Asymptotic => "asymptotic",
        }
    }
}

/// Average per-user rates in b/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rate: UserGrid<f64>,
    pub sum_rate: f64,
    pub source: RateSource,
    /// Zero for analytic reports.
    pub trials: u64,
    /// Standard error of each user's mean (Monte Carlo only).
    pub stderr: Option<UserGrid<f64>>,
    /// Standard error of the sum-rate mean (Monte Carlo only).
    pub sum_stderr: Option<f64>,
    /// Fraction of draws whose effective gains broke the index order
    /// within some cluster. Zero for analytic reports.
    pub order_violation_frac: f64,
}

impl RateReport {
    pub fn analytic(rate: UserGrid<f64>, source: RateSource) -> Self {
        let sum_rate = rate.sum();
        Self {
            rate,
            sum_rate,
            source,
            trials: 0,
            stderr: None,
            sum_stderr: None,
            order_violation_frac: 0.0,
        }
    }
}

/// Running sums of per-user instantaneous rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAccumulator {
    clusters: usize,
    users_per_cluster: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    total: f64,
    total_sq: f64,
    violations: u64,
    trials: u64,
}

impl RateAccumulator {
    pub fn new(clusters: usize, users_per_cluster: usize) -> Self {
        let len = clusters * users_per_cluster;
        Self {
            clusters,
            users_per_cluster,
            sum: alloc::vec![0.0; len],
            sum_sq: alloc::vec![0.0; len],
            total: 0.0,
            total_sq: 0.0,
            violations: 0,
            trials: 0,
        }
    }

    /// Adds one trial; `rates` is in row-major user order.
    pub fn push(&mut self, rates: &[f64], order_violated: bool) {
        debug_assert_eq!(rates.len(), self.sum.len());
        let mut t = 0.0;
        for ((s, q), &r) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(rates) {
            *s += r;
            *q += r * r;
            t += r;
        }
        self.total += t;
        self.total_sq += t * t;
        self.violations += u64::from(order_violated);
        self.trials += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.sum.len(), other.sum.len());
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.total += other.total;
        self.total_sq += other.total_sq;
        self.violations += other.violations;
        self.trials += other.trials;
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    /// Sample means and standard errors. The standard error is zero when
    /// fewer than two trials were run.
    pub fn report(&self) -> RateReport {
        let t = self.trials.max(1) as f64;
        let se = |s: f64, q: f64| {
            if self.trials < 2 {
                return 0.0;
            }
            let mean = s / t;
            let var = ((q - t * mean * mean) / (t - 1.0)).max(0.0);
            (var / t).sqrt()
        };
        let rate = self.sum.iter().map(|s| s / t).collect();
        let stderr = self.sum.iter().zip(&self.sum_sq).map(|(&s, &q)| se(s, q)).collect();
        let rate = UserGrid::from_vec(self.clusters, self.users_per_cluster, rate).expect("shape");
        let sum_rate = rate.sum();
        RateReport {
            rate,
            sum_rate,
            source: RateSource::MonteCarlo,
            trials: self.trials,
            stderr: Some(UserGrid::from_vec(self.clusters, self.users_per_cluster, stderr).expect("shape")),
            sum_stderr: Some(se(self.total, self.total_sq)),
            order_violation_frac: self.violations as f64 / t,
        }
    }
}

/// Effective gains `alpha_{n,k} |h_{n,k}^H w_i|^2` of one draw against every
/// cluster beam.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialGains {
    clusters: usize,
    users_per_cluster: usize,
    gain: Vec<f64>,
}

impl TrialGains {
    pub fn new(draw: &ChannelDraw, beams: &BeamSet, geometry: &SystemGeometry) -> Self {
        let clusters = geometry.clusters();
        let mut gain = Vec::with_capacity(geometry.total_users() * clusters);
        for ((n, k), h) in draw.h.indexed() {
            let a = geometry.alpha()[(n, k)];
            gain.extend(beams.beams.iter().map(|w| a * inner(h, w).norm_sqr()));
        }
        Self {
            clusters,
            users_per_cluster: geometry.users_per_cluster(),
            gain,
        }
    }

    /// Gain of user `(n, k)` through the beam of cluster `beam`.
    pub fn gain(&self, n: usize, k: usize, beam: usize) -> f64 {
        self.gain[(n * self.users_per_cluster + k) * self.clusters + beam]
    }

    /// SIC SINR of user `(n, k)` with unit noise.
    pub fn sinr(&self, n: usize, k: usize, plan: &PowerPlan) -> f64 {
        let own = self.gain(n, k, n);
        let intra: f64 = plan.power.cluster(n)[..k].iter().sum();
        let inter: f64 = (0..self.clusters)
            .filter(|&i| i != n)
            .map(|i| self.gain(n, k, i) * plan.power.cluster_sum(i))
            .sum();
        own * plan.power[(n, k)] / (own * intra + inter + 1.0)
    }

    /// Whether the own-beam gains break the index order in some cluster.
    pub fn order_violated(&self) -> bool {
        (0..self.clusters).any(|n| (1..self.users_per_cluster).any(|k| self.gain(n, k, n) > self.gain(n, k - 1, n)))
    }

    fn rates(&self, plan: &PowerPlan, out: &mut Vec<f64>) {
        out.clear();
        for n in 0..self.clusters {
            for k in 0..self.users_per_cluster {
                out.push((1.0 + self.sinr(n, k, plan)).log2());
            }
        }
    }
}

/// SIC SINR of user `(n, k)` for one draw, using the actual channel against
/// every other cluster's beam.
pub fn sinr(n: usize, k: usize, draw: &ChannelDraw, beams: &BeamSet, plan: &PowerPlan, geometry: &SystemGeometry) -> f64 {
    TrialGains::new(draw, beams, geometry).sinr(n, k, plan)
}

/// Splits `trials` into the fixed chunk ranges.
pub fn chunk_ranges(trials: u64) -> impl Iterator<Item = Range<u64>> {
    (0..trials.div_ceil(CHUNK_TRIALS)).map(move |c| c * CHUNK_TRIALS..((c + 1) * CHUNK_TRIALS).min(trials))
}

fn check_plans(geometry: &SystemGeometry, plans: &[PowerPlan]) -> Result<()> {
    match plans.iter().find(|p| !p.power.same_shape(geometry.alpha())) {
        Some(p) => Err(Error::Shape {
            expected: geometry.total_users(),
            got: p.power.len(),
        }),
        None => Ok(()),
    }
}

/// One chunk of NOMA trials, evaluated against several power plans on the
/// same channel draws. Returns one accumulator per plan.
pub fn noma_chunk(
    geometry: &SystemGeometry,
    rho: &UserGrid<f64>,
    plans: &[PowerPlan],
    seed: u64,
    trials: Range<u64>,
) -> Result<Vec<RateAccumulator>> {
    check_plans(geometry, plans)?;
    let (nc, kc) = (geometry.clusters(), geometry.users_per_cluster());
    let mut acc: Vec<_> = plans.iter().map(|_| RateAccumulator::new(nc, kc)).collect();
    let mut buf = Vec::with_capacity(geometry.total_users());
    for trial in trials {
        let draw = draw_channels(geometry, rho, seed, trial)?;
        let beams = zf_beams(&draw.h_hat, geometry, BeamWeights::Uniform)?;
        let gains = TrialGains::new(&draw, &beams, geometry);
        let violated = gains.order_violated();
        for (a, plan) in acc.iter_mut().zip(plans) {
            gains.rates(plan, &mut buf);
            a.push(&buf, violated);
        }
    }
    Ok(acc)
}

/// One chunk of TDMA trials with maximum-ratio beams on the estimates.
pub fn tdma_chunk(
    geometry: &SystemGeometry,
    rho: &UserGrid<f64>,
    total_power: f64,
    seed: u64,
    trials: Range<u64>,
) -> Result<RateAccumulator> {
    if !(total_power > 0.0) {
        return Err(Error::Domain("total power must be positive"));
    }
    let slot = 1.0 / geometry.total_users() as f64;
    let mut acc = RateAccumulator::new(geometry.clusters(), geometry.users_per_cluster());
    let mut buf = Vec::with_capacity(geometry.total_users());
    for trial in trials {
        let draw = draw_channels(geometry, rho, seed, trial)?;
        buf.clear();
        for ((n, k), h) in draw.h.indexed() {
            let est = &draw.h_hat[(n, k)];
            let g = inner(h, est).norm_sqr() / norm(est).powi(2);
            buf.push(slot * (1.0 + total_power * geometry.alpha()[(n, k)] * g).log2());
        }
        acc.push(&buf, false);
    }
    Ok(acc)
}

/// Merges per-chunk accumulators in the given order.
pub fn merge_chunks<I: IntoIterator<Item = RateAccumulator>>(chunks: I, clusters: usize, users_per_cluster: usize) -> RateAccumulator {
    chunks.into_iter().fold(RateAccumulator::new(clusters, users_per_cluster), |mut a, c| {
        a.merge(&c);
        a
    })
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::Domain("at least one trial is required"))
    } else {
        Ok(())
    }
}

/// Monte Carlo rates for several power plans sharing the same draws.
pub fn monte_carlo_sweep(
    geometry: &SystemGeometry,
    csi: &CsiSpec,
    plans: &[PowerPlan],
    trials: u64,
    seed: u64,
) -> Result<Vec<RateReport>> {
    check_trials(trials)?;
    let rho = csi.accuracies(geometry)?;
    let (nc, kc) = (geometry.clusters(), geometry.users_per_cluster());
    let mut total: Vec<_> = plans.iter().map(|_| RateAccumulator::new(nc, kc)).collect();
    for range in chunk_ranges(trials) {
        for (t, c) in total.iter_mut().zip(noma_chunk(geometry, &rho, plans, seed, range)?) {
            t.merge(&c);
        }
    }
    Ok(total.iter().map(RateAccumulator::report).collect())
}

/// Monte Carlo average rates of the NOMA downlink.
pub fn monte_carlo_rates(
    geometry: &SystemGeometry,
    csi: &CsiSpec,
    plan: &PowerPlan,
    trials: u64,
    seed: u64,
) -> Result<RateReport> {
    let mut v = monte_carlo_sweep(geometry, csi, core::slice::from_ref(plan), trials, seed)?;
    Ok(v.pop().expect("one plan"))
}

/// TDMA baseline: each user gets `1 / (NK)` of the time at full power with a
/// maximum-ratio beam on its estimate.
pub fn tdma_mrt_baseline(
    geometry: &SystemGeometry,
    csi: &CsiSpec,
    total_power: f64,
    trials: u64,
    seed: u64,
) -> Result<RateReport> {
    check_trials(trials)?;
    let rho = csi.accuracies(geometry)?;
    let mut acc = RateAccumulator::new(geometry.clusters(), geometry.users_per_cluster());
    for range in chunk_ranges(trials) {
        acc.merge(&tdma_chunk(geometry, &rho, total_power, seed, range)?);
    }
    Ok(acc.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{table1_rho, SystemGeometry};

    fn equal_plan(g: &SystemGeometry, total: f64) -> PowerPlan {
        let each = total / g.total_users() as f64;
        PowerPlan::new(UserGrid::filled(g.clusters(), g.users_per_cluster(), each), total).unwrap()
    }

    #[test]
    fn plan_validation() {
        assert!(PowerPlan::new(UserGrid::filled(1, 2, 1.0), 1.5).is_err());
        assert!(PowerPlan::new(UserGrid::filled(1, 2, 0.0), 1.0).is_err());
        let p = PowerPlan::new(UserGrid::filled(2, 2, 1.0), 4.0).unwrap();
        assert_eq!(p.cluster_powers(), alloc::vec![2.0, 2.0]);
    }

    #[test]
    fn chunks_cover_trials() {
        let r: Vec<_> = chunk_ranges(2 * CHUNK_TRIALS + 5).collect();
        assert_eq!(r.len(), 3);
        assert_eq!(r[2], 2 * CHUNK_TRIALS..2 * CHUNK_TRIALS + 5);
        assert_eq!(chunk_ranges(0).count(), 0);
    }

    #[test]
    fn deterministic_and_chunk_invariant() {
        let g = SystemGeometry::table1();
        let csi = CsiSpec::Direct { rho: table1_rho() };
        let plan = equal_plan(&g, 100.0);
        let a = monte_carlo_rates(&g, &csi, &plan, 1, 9).unwrap();
        let b = monte_carlo_rates(&g, &csi, &plan, 1, 9).unwrap();
        assert_eq!(a, b);

        let rho = table1_rho();
        let whole = noma_chunk(&g, &rho, core::slice::from_ref(&plan), 3, 0..40).unwrap();
        let mut parts = noma_chunk(&g, &rho, core::slice::from_ref(&plan), 3, 0..15).unwrap();
        parts[0].merge(&noma_chunk(&g, &rho, core::slice::from_ref(&plan), 3, 15..40).unwrap()[0]);
        let (x, y) = (whole[0].report(), parts[0].report());
        for (p, q) in x.rate.iter().zip(y.rate.iter()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_csi_strong_user_has_no_interference() {
        let g = SystemGeometry::table1();
        let rho = UserGrid::filled(3, 2, 1.0);
        let draw = draw_channels(&g, &rho, 5, 0).unwrap();
        let beams = zf_beams(&draw.h_hat, &g, BeamWeights::Uniform).unwrap();
        let plan = equal_plan(&g, 60.0);
        let gains = TrialGains::new(&draw, &beams, &g);
        for n in 0..3 {
            let expect = gains.gain(n, 0, n) * 10.0;
            assert!((sinr(n, 0, &draw, &beams, &plan, &g) - expect).abs() <= 1e-9 * expect);
        }
    }

    #[test]
    fn weak_user_sinr_bound() {
        let g = SystemGeometry::table1();
        let csi_rho = table1_rho();
        let plan = equal_plan(&g, 1e6);
        for t in 0..20 {
            let draw = draw_channels(&g, &csi_rho, 2, t).unwrap();
            let beams = zf_beams(&draw.h_hat, &g, BeamWeights::Uniform).unwrap();
            assert!(sinr(2, 1, &draw, &beams, &plan, &g) <= 1.0);
        }
    }

    #[test]
    fn tdma_rates_are_time_shared() {
        let g = SystemGeometry::table1();
        let csi = CsiSpec::Direct { rho: table1_rho() };
        let r = tdma_mrt_baseline(&g, &csi, 10.0, 200, 1).unwrap();
        assert!(r.rate.iter().all(|&x| x > 0.0 && x < 2.0));
        assert!(tdma_mrt_baseline(&g, &csi, 10.0, 0, 1).is_err());
    }
}
