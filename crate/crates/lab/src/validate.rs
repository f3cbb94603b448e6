//! The invariant suite behind the `validate` command.
//!
//! Every check is self-contained and seeded, so the suite is reproducible.
//! Checks marked `structural` are exact or distributional identities of the
//! model; the others compare the model against its own approximations.

use std::time::{Duration, Instant};

use noma_core::allocation::{
    closed_form_sum_rate, enumerate_modes, equal_power, feedback_allocation, fixed_ratio_baseline,
    inter_cluster_objective, leakage_weights, power_allocation, round_robin_geometry, select_mode,
    total_interference, ModeScore, TransmissionMode,
};
use noma_core::analytic::{asymptotic_rates, avg_rate, beta_params, closed_form_rates, eta_params, RateParams};
use noma_core::beamforming::{zf_beams, BeamWeights};
use noma_core::channel::{
    csi_accuracy_fdd, csi_accuracy_tdd, draw_channels, simulate_pilot_estimation, table1_rho, CsiSpec,
    SystemGeometry,
};
use noma_core::cmat::{inner, norm};
use noma_core::link::{PowerPlan, RateReport};
use noma_core::mixture::{avg_log_term, ErlangMixture};
use noma_core::rng::{substream, AUX_STREAM_BASE};
use noma_core::special::expint_ei;
use noma_core::{snr_db_to_power, UserGrid};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::experiments::{closed_form, UserPool};
use crate::results::{read_rows, report_rows, write_rows};
use crate::runner;

/// Trial counts and seed of one suite run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSettings {
    /// Monte Carlo trials for link-level rate checks.
    pub trials: u64,
    pub seed: u64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            trials: crate::config::DEFAULT_TRIALS,
            seed: crate::config::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub structural: bool,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {:<32} {:>7.2}s  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.elapsed.as_secs_f64(),
                    c.detail
                )
            })
            .collect()
    }
}

/// Outcome of one check body: pass flag and a one-line detail.
type Outcome = Result<(bool, String), String>;

type CheckFn = fn(&SuiteSettings) -> Outcome;

/// Name, structural flag and body of every check, in run order.
pub const CHECKS: &[(&str, bool, CheckFn)] = &[
    ("channel/forward-model", true, forward_model),
    ("channel/unit-variance", true, unit_variance),
    ("channel/pilot-accuracy", true, pilot_accuracy),
    ("channel/fdd-accuracy-limits", true, fdd_limits),
    ("beam/zero-forcing", true, zero_forcing),
    ("beam/unit-norm", true, unit_norm),
    ("beam/error-projection-law", true, error_projection_law),
    ("mixture/weight-normalization", true, weight_normalization),
    ("mixture/pdf-normalization", true, pdf_normalization),
    ("mixture/cdf-vs-samples", true, cdf_vs_samples),
    ("mixture/log-term-vs-samples", false, log_term_vs_samples),
    ("special/ei-accuracy", false, ei_accuracy),
    ("analytic/rate-monotone", false, rate_monotone),
    ("analytic/high-power-limit", false, high_power_limit),
    ("link/order-violations", false, order_violations),
    ("link/monotone-in-power", false, monotone_in_power),
    ("link/saturation", false, saturation),
    ("link/analytic-agreement", false, analytic_agreement),
    ("alloc/power-budget", true, power_budget),
    ("alloc/cluster-total-invariance", true, cluster_total_invariance),
    ("alloc/bit-budget", true, bit_budget),
    ("alloc/feedback-vs-exhaustive", false, feedback_vs_exhaustive),
    ("alloc/mode-extremes", false, mode_extremes),
    ("alloc/mode-selection-monte-carlo", false, mode_selection_monte_carlo),
    ("cli/csv-round-trip", true, csv_round_trip),
];

/// Runs every check. Checks run one after another; each parallelizes
/// internally.
pub fn run_suite(settings: &SuiteSettings) -> SuiteReport {
    run_selected(settings, |_| true)
}

/// Runs the checks whose name passes `filter`.
pub fn run_selected(settings: &SuiteSettings, filter: impl Fn(&str) -> bool) -> SuiteReport {
    let start = Instant::now();
    let checks = CHECKS
        .iter()
        .filter(|(name, _, _)| filter(name))
        .map(|&(name, structural, body)| {
            let t = Instant::now();
            let (passed, detail) = match body(settings) {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            Check {
                name,
                structural,
                passed,
                detail,
                elapsed: t.elapsed(),
            }
        })
        .collect();
    SuiteReport {
        checks,
        elapsed: start.elapsed(),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Kolmogorov-Smirnov critical value at the 1% level.
fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Asymptotic Kolmogorov-Smirnov critical value at level `level`.
fn ks_critical_at(n: usize, level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn table1() -> (SystemGeometry, UserGrid<f64>) {
    (SystemGeometry::table1(), table1_rho())
}

const STRUCTURAL_DRAWS: u64 = 2000;

fn forward_model(s: &SuiteSettings) -> Outcome {
    let (g, rho) = table1();
    let worst = (0..STRUCTURAL_DRAWS)
        .into_par_iter()
        .map(|t| {
            let d = draw_channels(&g, &rho, s.seed, t).map_err(err)?;
            let mut worst = 0.0_f64;
            for ((n, k), h) in d.h.indexed() {
                let (a, b) = (rho[(n, k)].sqrt(), (1.0 - rho[(n, k)]).sqrt());
                for ((x, y), z) in h.iter().zip(&d.h_hat[(n, k)]).zip(&d.e[(n, k)]) {
                    worst = worst.max((x - y * a - z * b).norm());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst < 1e-12, format!("max residual {worst:.3e} over {STRUCTURAL_DRAWS} draws")))
}

fn unit_variance(s: &SuiteSettings) -> Outcome {
    let (g, rho) = table1();
    let users = g.total_users();
    let chunks: Vec<_> = noma_core::link::chunk_ranges(s.trials).collect();
    let partial = chunks
        .into_par_iter()
        .map(|range| {
            let mut v = vec![0.0; 3 * users];
            for t in range {
                let d = draw_channels(&g, &rho, s.seed, t).map_err(err)?;
                for (u, ((h, hh), e)) in d.h.iter().zip(d.h_hat.iter()).zip(d.e.iter()).enumerate() {
                    v[u] += h.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    v[users + u] += hh.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    v[2 * users + u] += e.iter().map(|z| z.norm_sqr()).sum::<f64>();
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<Vec<f64>>, String>>()?;
    let sums = partial.into_iter().fold(vec![0.0; 3 * users], |mut a, b| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    });
    let count = (s.trials * g.antennas() as u64) as f64;
    let worst = sums.iter().map(|v| (v / count - 1.0).abs()).fold(0.0, f64::max);
    Ok((
        worst <= 0.02,
        format!("max |E|entry|^2 - 1| = {worst:.4} for h, h_hat, e over {} draws", s.trials),
    ))
}

fn pilot_accuracy(s: &SuiteSettings) -> Outcome {
    let g = SystemGeometry::table1();
    let (tau, p) = (20, 5.0);
    let power = UserGrid::filled(3, 2, p);
    let est = simulate_pilot_estimation(&g, tau, &power, s.trials as usize, s.seed).map_err(err)?;
    let mut worst = 0.0_f64;
    for ((n, k), &r) in est.empirical_rho.indexed() {
        let want = csi_accuracy_tdd(tau as f64, p, g.alpha()[(n, k)]).map_err(err)?;
        worst = worst.max((r - want).abs() / want);
    }
    Ok((
        worst <= 0.01,
        format!("max relative gap {worst:.4} (tau = {tau}, P = {p}, {} slots)", s.trials),
    ))
}

fn fdd_limits(_: &SuiteSettings) -> Outcome {
    let m = 6;
    let mut prev = -1.0;
    for b in 0..=400 {
        let r = csi_accuracy_fdd(f64::from(b), m).map_err(err)?;
        if r < prev {
            return Ok((false, format!("accuracy decreased at B = {b}")));
        }
        prev = r;
    }
    if prev < 1.0 - 1e-20 {
        return Ok((false, format!("accuracy {prev} at 400 bits")));
    }
    let mut worst = 0.0_f64;
    for b in [1.0, 2.0, 5.0, 12.0, 30.0] {
        for m in [2, 3, 6, 11] {
            let narrow = -(1.0 - csi_accuracy_fdd(b, m).map_err(err)?).log2();
            let wide = -(1.0 - csi_accuracy_fdd(b, 2 * (m - 1) + 1).map_err(err)?).log2();
            worst = worst.max((narrow - 2.0 * wide).abs() / narrow);
        }
    }
    Ok((
        worst < 1e-9,
        format!("monotone to 1; doubling M-1 halves -log2(1-rho) within {worst:.1e}"),
    ))
}

/// Worst zero-forcing residual and worst norm error over the structural draws.
fn beam_residuals(seed: u64) -> Result<(f64, f64), String> {
    let (g, rho) = table1();
    let per_draw = (0..STRUCTURAL_DRAWS)
        .into_par_iter()
        .map(|t| {
            let d = draw_channels(&g, &rho, seed, t).map_err(err)?;
            let b = zf_beams(&d.h_hat, &g, BeamWeights::Uniform).map_err(err)?;
            let mut zf = 0.0_f64;
            let mut unit = 0.0_f64;
            for (i, w) in b.beams.iter().enumerate() {
                unit = unit.max((norm(w) - 1.0).abs());
                for ((m, _), h) in d.h_hat.indexed() {
                    if m != i {
                        zf = zf.max(inner(h, w).norm());
                    }
                }
            }
            Ok((zf, unit))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(per_draw
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (f64::max(a, x), f64::max(b, y))))
}

fn zero_forcing(s: &SuiteSettings) -> Outcome {
    let (zf, _) = beam_residuals(s.seed)?;
    Ok((zf <= 1e-9, format!("max |h_hat^H w| = {zf:.3e} over {STRUCTURAL_DRAWS} draws")))
}

fn unit_norm(s: &SuiteSettings) -> Outcome {
    let (_, unit) = beam_residuals(s.seed)?;
    Ok((unit <= 1e-12, format!("max | |w| - 1 | = {unit:.3e}")))
}

fn error_projection_law(s: &SuiteSettings) -> Outcome {
    let (g, rho) = table1();
    let n = 10_000;
    let mut samples = (0..n as u64)
        .into_par_iter()
        .map(|t| {
            let d = draw_channels(&g, &rho, s.seed ^ 0x5eed, t).map_err(err)?;
            let b = zf_beams(&d.h_hat, &g, BeamWeights::Uniform).map_err(err)?;
            Ok(inner(&d.e[(0, 0)], &b.beams[1]).norm_sqr())
        })
        .collect::<Result<Vec<f64>, String>>()?;
    let mean = samples.iter().sum::<f64>() / n as f64;
    let d = ks_distance(&mut samples, |x| 1.0 - (-x).exp());
    Ok((
        d < ks_critical(n),
        format!("KS distance {d:.4} vs critical {:.4}, sample mean {mean:.4}", ks_critical(n)),
    ))
}

fn random_params(r: &mut impl Rng) -> Result<RateParams, String> {
    let n = r.random_range(1..=4);
    let k = r.random_range(1..=3);
    let alpha = UserGrid::from_fn(n, k, |_, j| r.random_range(0.05..1.0) / (1.0 + j as f64));
    let rho = UserGrid::from_fn(n, k, |_, _| r.random_range(0.0..1.0));
    let raw = UserGrid::from_fn(n, k, |_, _| r.random_range(0.1..1.0));
    let total = raw.sum();
    RateParams::new(alpha, rho, raw.map(|x| x / total), 10f64.powf(r.random_range(-1.0..5.0))).map_err(err)
}

fn weight_normalization(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 100);
    let (mut checked, mut flagged, mut worst) = (0_usize, 0_usize, 0.0_f64);
    for _ in 0..1000 {
        let p = random_params(&mut r)?;
        for n in 0..p.clusters() {
            for k in 0..p.users_per_cluster() {
                for scales in [eta_params(n, k, &p).map_err(err)?, beta_params(n, k, &p).map_err(err)?] {
                    let m = ErlangMixture::from_scales(&scales).map_err(err)?;
                    if m.ill_conditioned {
                        flagged += 1;
                    } else if !m.is_point_mass() {
                        checked += 1;
                        worst = worst.max((m.weight_sum() - 1.0).abs());
                    }
                }
            }
        }
    }
    Ok((
        worst <= 1e-9 && flagged * 50 < checked,
        format!("max |sum Xi - 1| = {worst:.2e} over {checked} lists; {flagged} near-tie lists use the transform path"),
    ))
}

fn random_scales(r: &mut impl Rng) -> Vec<f64> {
    let q = r.random_range(1..=4);
    (0..q).map(|_| 10f64.powf(r.random_range(-1.0..2.0))).collect()
}

/// Adaptive Simpson quadrature on `[a, b]`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

fn pdf_normalization(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 101);
    let mut worst = 0.0_f64;
    let mut negative = 0;
    for _ in 0..100 {
        let scales = random_scales(&mut r);
        let m = ErlangMixture::from_scales(&scales).map_err(err)?;
        let top = m.max_scale();
        let pdf = |x: f64| m.pdf(x);
        let hi = 80.0 * top;
        let pieces = 200;
        let w = hi / f64::from(pieces);
        let total: f64 = (0..pieces)
            .map(|i| simpson(&pdf, f64::from(i) * w, f64::from(i + 1) * w, 1e-13))
            .sum();
        worst = worst.max((total - 1.0).abs());
        negative += (0..1000).filter(|i| m.pdf(f64::from(*i) * hi / 1000.0) < -1e-12).count();
    }
    Ok((
        worst <= 1e-6 && negative == 0,
        format!("max |int pdf - 1| = {worst:.2e}; {negative} negative density samples"),
    ))
}

fn exp_sums(scales: &[f64], n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let chunks = n.div_ceil(10_000);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut r = substream(seed, c as u64, stream);
            let len = 10_000.min(n - c * 10_000);
            (0..len)
                .map(|_| {
                    scales
                        .iter()
                        .map(|s| s * <Exp1 as Distribution<f64>>::sample(&Exp1, &mut r))
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn cdf_vs_samples(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 102);
    let n = 100_000;
    let mut worst = 0.0_f64;
    let sets = 20;
    for i in 0..sets {
        let scales = random_scales(&mut r);
        let m = ErlangMixture::from_scales(&scales).map_err(err)?;
        let mut x = exp_sums(&scales, n, s.seed, AUX_STREAM_BASE + 200 + i);
        worst = worst.max(ks_distance(&mut x, |v| m.cdf(v)));
    }
    // 1% family-wise level over all sets
    let critical = ks_critical_at(n, 0.01 / sets as f64);
    Ok((
        worst < critical,
        format!("max KS distance {worst:.4} vs critical {critical:.4} on {sets} scale sets"),
    ))
}

fn log_term_vs_samples(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 103);
    let n = 1_000_000;
    let mut worst = 0.0_f64;
    for i in 0..5 {
        let scales = random_scales(&mut r);
        let exact = avg_log_term(&scales).map_err(err)?;
        let x = exp_sums(&scales, n, s.seed, AUX_STREAM_BASE + 300 + i);
        let mc = x.iter().map(|v| (1.0 + v).log2()).sum::<f64>() / n as f64;
        worst = worst.max((mc - exact).abs() / exact);
    }
    Ok((
        worst <= 0.005,
        format!("max relative gap {worst:.5} on 5 scale sets at {n} samples"),
    ))
}

/// `Ei(-z) = -E1(z)` with `E1(z) = e^{-z} int_0^inf e^{-u} / (z + u) du`,
/// integrated over `v = ln u`.
fn ei_by_quadrature(x: f64) -> f64 {
    let z = -x;
    let f = |v: f64| {
        let u = v.exp();
        (-u).exp() * u / (z + u)
    };
    let lo = z.ln().min(0.0) - 40.0;
    let hi = 4.5;
    let pieces = 64;
    let w = (hi - lo) / f64::from(pieces);
    let total: f64 = (0..pieces)
        .map(|i| simpson(&f, lo + f64::from(i) * w, lo + f64::from(i + 1) * w, 1e-17))
        .sum();
    -(-z).exp() * total
}

fn ei_accuracy(_: &SuiteSettings) -> Outcome {
    let mut worst = 0.0_f64;
    let mut at = 0.0;
    for i in 0..200 {
        let x = -(10f64.powf(-4.0 + f64::from(i) / 199.0 * (50f64.log10() + 4.0)));
        let want = ei_by_quadrature(x);
        let got = expint_ei(x).map_err(err)?;
        let rel = ((got - want) / want).abs();
        if rel > worst {
            worst = rel;
            at = x;
        }
    }
    Ok((
        worst <= 1e-10,
        format!("max relative error {worst:.2e} at x = {at:.4e} on [-50, -1e-4]"),
    ))
}

fn rate_monotone(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 104);
    let mut configs = vec![{
        let (g, rho) = table1();
        let plan = equal_power(&g, 1.0).map_err(err)?;
        RateParams::from_plan(&g, &rho, &plan).map_err(err)?
    }];
    for _ in 0..20 {
        configs.push(random_params(&mut r)?);
    }
    for p in &configs {
        for n in 0..p.clusters() {
            for k in 0..p.users_per_cluster() {
                let mut prev = 0.0;
                for i in 0..20 {
                    let q = RateParams {
                        total_power: 10f64.powf(-2.0 + 0.35 * f64::from(i)),
                        ..p.clone()
                    };
                    let v = avg_rate(n, k, &q).map_err(err)?;
                    if v < 0.0 || v < prev - 1e-12 {
                        return Ok((false, format!("rate of user ({n}, {k}) fell to {v} at step {i}")));
                    }
                    prev = v;
                }
            }
        }
    }
    Ok((true, format!("{} configurations, 20 power levels each", configs.len())))
}

fn high_power_limit(_: &SuiteSettings) -> Outcome {
    let (g, rho) = table1();
    let plan = equal_power(&g, snr_db_to_power(60.0)).map_err(err)?;
    let p = RateParams::from_plan(&g, &rho, &plan).map_err(err)?;
    let cf = closed_form_rates(&p).map_err(err)?;
    let asym = asymptotic_rates(&p).map_err(err)?;
    let worst = cf
        .rate
        .iter()
        .zip(asym.rate.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((worst <= 0.02, format!("max per-user gap {worst:.2e} b/s/Hz at 60 dB")))
}

const LINK_SNR_DB: [f64; 6] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0];

/// Table I Monte Carlo and closed-form reports at [`LINK_SNR_DB`], equal power.
fn link_sweep(s: &SuiteSettings) -> Result<Vec<(f64, RateReport, RateReport)>, String> {
    let (g, rho) = table1();
    let plans: Vec<PowerPlan> = LINK_SNR_DB
        .iter()
        .map(|&d| equal_power(&g, snr_db_to_power(d)))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let mc = runner::monte_carlo_sweep(&g, &CsiSpec::Direct { rho: rho.clone() }, &plans, s.trials, s.seed)
        .map_err(err)?;
    LINK_SNR_DB
        .iter()
        .zip(plans.iter().zip(mc))
        .map(|(&d, (plan, m))| Ok((d, m, closed_form(&g, &rho, plan).map_err(err)?)))
        .collect()
}

fn order_violations(s: &SuiteSettings) -> Outcome {
    let sweep = link_sweep(&SuiteSettings {
        trials: s.trials.min(20_000),
        ..*s
    })?;
    let frac = sweep[0].1.order_violation_frac;
    Ok((frac < 0.5, format!("fraction of draws with gains out of index order: {frac:.4}")))
}

fn monotone_in_power(s: &SuiteSettings) -> Outcome {
    let sweep = link_sweep(s)?;
    let (low, high) = (sweep[0].1.sum_rate, sweep[2].1.sum_rate);
    Ok((high >= low, format!("sum rate {low:.4} at 0 dB, {high:.4} at 20 dB")))
}

fn saturation(s: &SuiteSettings) -> Outcome {
    let sweep = link_sweep(s)?;
    let delta = sweep[5].1.sum_rate - sweep[4].1.sum_rate;
    Ok((delta <= 0.05, format!("sum rate gain from 40 to 50 dB: {delta:.4} b/s/Hz")))
}

fn analytic_agreement(s: &SuiteSettings) -> Outcome {
    let sweep = link_sweep(s)?;
    let mut worst = (0.0_f64, 0.0, 0, 0);
    let mut fails = Vec::new();
    for (d, mc, cf) in sweep.iter().take(5) {
        for ((n, k), &c) in cf.rate.indexed() {
            let gap = (mc.rate[(n, k)] - c).abs();
            let tol = (0.02 * c.abs()).max(0.05);
            if gap / tol > worst.0 {
                worst = (gap / tol, *d, n + 1, k + 1);
            }
            if gap > tol {
                fails.push(format!("{d} dB MU({},{})", n + 1, k + 1));
            }
        }
    }
    let detail = format!(
        "worst gap/tolerance {:.3} at {} dB MU({},{}); {} of 30 points outside max(2%, 0.05)",
        worst.0,
        worst.1,
        worst.2,
        worst.3,
        fails.len()
    );
    Ok((fails.is_empty(), detail))
}

fn power_budget(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 105);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for i in 0..200 {
        let (g, rho) = if i == 0 {
            table1()
        } else {
            let n = r.random_range(1..=3);
            let k = r.random_range(1..=3);
            let mut alpha = UserGrid::from_fn(n, k, |_, _| r.random_range(0.05..1.0_f64));
            for c in 0..n {
                let mut row = alpha.cluster(c).to_vec();
                row.sort_by(|a, b| b.total_cmp(a));
                for (j, v) in row.into_iter().enumerate() {
                    alpha[(c, j)] = v;
                }
            }
            let g = SystemGeometry::new((n - 1) * k + 1 + r.random_range(0..3), alpha).map_err(err)?;
            let rho = UserGrid::from_fn(n, k, |_, _| r.random_range(0.0..1.0));
            (g, rho)
        };
        let total = 10f64.powf(r.random_range(-2.0..5.0));
        let mut plans = vec![power_allocation(&g, &rho, total).map_err(err)?, equal_power(&g, total).map_err(err)?];
        if g.users_per_cluster() == 2 {
            plans.push(fixed_ratio_baseline(&g, total).map_err(err)?);
        }
        for p in plans {
            if p.power.iter().any(|x| !(*x > 0.0)) {
                return Ok((false, "a plan has a non-positive user power".to_string()));
            }
            worst = worst.max((p.total() - total).abs() / total);
            count += 1;
        }
    }
    Ok((worst <= 1e-12, format!("max relative budget error {worst:.2e} over {count} plans")))
}

fn cluster_total_invariance(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 106);
    let (g, rho) = table1();
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let base = UserGrid::from_fn(3, 2, |_, _| r.random_range(0.1..10.0));
        let mut shuffled = base.clone();
        for n in 0..3 {
            let total = base.cluster_sum(n);
            let split = r.random_range(0.05..0.95);
            shuffled[(n, 0)] = split * total;
            shuffled[(n, 1)] = total - split * total;
        }
        let a = PowerPlan::new(base.clone(), base.sum() * 2.0).map_err(err)?;
        let b = PowerPlan::new(shuffled, base.sum() * 2.0).map_err(err)?;
        let ia = total_interference(&g, &rho, &a.cluster_powers());
        let ib = total_interference(&g, &rho, &b.cluster_powers());
        worst = worst.max((ia - ib).abs() / ia);
    }
    Ok((
        worst <= 1e-14,
        format!("max relative change of the interference objective {worst:.1e} over 200 reshuffles"),
    ))
}

fn bit_budget(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 107);
    let g = SystemGeometry::table1();
    for _ in 0..200 {
        let powers: Vec<f64> = (0..3).map(|_| r.random_range(0.1..100.0)).collect();
        let budget = r.random_range(0..200);
        let plan = feedback_allocation(&g, &powers, 6, budget).map_err(err)?;
        if plan.used() > budget {
            return Ok((false, format!("{} bits used of {budget}", plan.used())));
        }
    }
    Ok((true, "200 random instances within budget".to_string()))
}

/// Exhaustive minimum of `sum_u c_u 2^(-b_u / d)` over integer plans.
pub fn exhaustive_bits(c: &[f64], d: f64, budget: u32) -> f64 {
    fn rec(c: &[f64], d: f64, left: u32) -> f64 {
        match c.split_first() {
            None => 0.0,
            Some((&head, rest)) => (0..=left)
                .map(|b| head * (-f64::from(b) / d).exp2() + rec(rest, d, left - b))
                .fold(f64::INFINITY, f64::min),
        }
    }
    rec(c, d, budget)
}

/// Largest objective decrease from giving any one user one more bit.
pub fn best_greedy_step(c: &[f64], bits: &[u32], d: f64) -> f64 {
    c.iter()
        .zip(bits)
        .map(|(&c, &b)| c * (-f64::from(b) / d).exp2() * (1.0 - (-1.0 / d).exp2()))
        .fold(0.0, f64::max)
}

fn feedback_vs_exhaustive(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 108);
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for i in 0..60 {
        let k = if i < 40 { 1 } else { 2 };
        let mut alpha = UserGrid::from_fn(2, k, |_, _| r.random_range(0.05..1.0_f64));
        for n in 0..2 {
            if k == 2 && alpha[(n, 1)] > alpha[(n, 0)] {
                let a = alpha[(n, 0)];
                alpha[(n, 0)] = alpha[(n, 1)];
                alpha[(n, 1)] = a;
            }
        }
        let m = 2 * k + 1;
        let g = SystemGeometry::new(m, alpha).map_err(err)?;
        let powers = [r.random_range(0.5..5.0), r.random_range(0.5..5.0)];
        let c: Vec<f64> = leakage_weights(&g, &powers).map_err(err)?.into_vec();
        let d = (m - 1) as f64;
        for budget in 0..=12 {
            let plan = feedback_allocation(&g, &powers, m, budget).map_err(err)?;
            let obj = inter_cluster_objective(&plan.as_real(), &g, &powers, m).map_err(err)?;
            let best = exhaustive_bits(&c, d, budget);
            let step = best_greedy_step(&c, plan.bits.as_slice(), d);
            if obj - best > step + 1e-12 * best {
                return Ok((false, format!("budget {budget}: objective {obj} vs optimum {best}")));
            }
            worst = worst.max((obj - best) / best);
            cases += 1;
        }
    }
    Ok((true, format!("{cases} instances; max relative excess over the optimum {worst:.1e}")))
}

fn mode_extremes(s: &SuiteSettings) -> Outcome {
    let mut r = substream(s.seed, 0, AUX_STREAM_BASE + 109);
    let total_power = snr_db_to_power(10.0);
    let mut misses = Vec::new();
    for i in 0..100 {
        let alpha: Vec<f64> = (0..6).map(|_| r.random_range(0.05..1.0)).collect();
        for (rho, want) in [(0.0, (1, 6)), (1.0, (6, 1))] {
            let best = select_mode(
                6,
                6,
                |m| round_robin_geometry(&alpha, m, 6),
                |g| Ok(UserGrid::filled(g.clusters(), g.users_per_cluster(), rho)),
                |g, rho| closed_form_sum_rate(g, rho, &equal_power(g, total_power)?),
            )
            .map_err(err)?;
            if (best.mode.clusters, best.mode.users_per_cluster) != want {
                misses.push(format!("case {i} rho {rho}"));
            }
        }
    }
    Ok((
        misses.is_empty(),
        format!("{} of 200 selections differ from the extremes {}", misses.len(), misses.join(", ")),
    ))
}

fn mode_selection_monte_carlo(s: &SuiteSettings) -> Outcome {
    let (g, rho) = table1();
    let pool = UserPool::new(
        &g,
        &crate::config::CsiConfig::Direct {
            rho: crate::config::Table::PerUser(rho),
        },
    )
    .map_err(err)?;
    let total_power = snr_db_to_power(10.0);
    let score = |mc: bool| -> Result<Vec<ModeScore>, String> {
        enumerate_modes(6, 6)
            .into_iter()
            .map(|mode: TransmissionMode| {
                let g = pool.geometry(mode).map_err(err)?;
                let rho = pool.rho(&g).map_err(err)?;
                let plan = equal_power(&g, total_power).map_err(err)?;
                let sum_rate = if mc {
                    runner::monte_carlo_rates(&g, &CsiSpec::Direct { rho }, &plan, s.trials, s.seed)
                        .map_err(err)?
                        .sum_rate
                } else {
                    closed_form_sum_rate(&g, &rho, &plan).map_err(err)?
                };
                Ok(ModeScore { mode, sum_rate })
            })
            .collect()
    };
    let cf = score(false)?;
    let mc = score(true)?;
    let pick = |v: &[ModeScore]| noma_core::allocation::best_mode(v).map(|b| b.mode).map_err(err);
    let (a, b) = (pick(&cf)?, pick(&mc)?);
    let fmt = |v: &[ModeScore]| {
        v.iter()
            .map(|s| format!("({},{}) {:.3}", s.mode.clusters, s.mode.users_per_cluster, s.sum_rate))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok((
        a == b,
        format!(
            "closed form picks ({},{}), Monte Carlo picks ({},{}); cf {} | mc {}",
            a.clusters,
            a.users_per_cluster,
            b.clusters,
            b.users_per_cluster,
            fmt(&cf),
            fmt(&mc)
        ),
    ))
}

fn csv_round_trip(_: &SuiteSettings) -> Outcome {
    let (g, rho) = table1();
    let mut rows = Vec::new();
    for d in [-20.0, 0.0, 12.5, 60.0] {
        let plan = power_allocation(&g, &rho, snr_db_to_power(d)).map_err(err)?;
        let p = RateParams::from_plan(&g, &rho, &plan).map_err(err)?;
        rows.extend(report_rows("round-trip", "snr_db", d, &closed_form_rates(&p).map_err(err)?, None));
        rows.extend(report_rows("round-trip", "snr_db", d, &asymptotic_rates(&p).map_err(err)?, None));
    }
    let mc = runner::monte_carlo_rates(&g, &CsiSpec::Direct { rho }, &equal_power(&g, 10.0).map_err(err)?, 64, 3)
        .map_err(err)?;
    rows.extend(report_rows("round-trip", "total_power", 10.0, &mc, None));
    let mut buf = Vec::new();
    write_rows(&mut buf, &rows).map_err(err)?;
    let back = read_rows(buf.as_slice()).map_err(err)?;
    Ok((back == rows, format!("{} rows re-parsed", rows.len())))
}
