//! Command implementations. Each returns CSV rows, an optional plot script
//! and a few human-readable summary lines.

use std::fmt;
use std::str::FromStr;

use noma_core::allocation::{
    best_mode, closed_form_sum_rate, enumerate_modes, equal_power, feedback_allocation, fixed_ratio_baseline,
    joint_candidates, power_allocation, round_robin_geometry, CsiBudget, FeedbackPlan, ModeScore, TransmissionMode,
};
use noma_core::analytic::{asymptotic_rates, closed_form_rates, RateParams};
use noma_core::channel::{csi_accuracy_fdd, csi_accuracy_tdd, table1_rho, CsiSpec, SystemGeometry};
use noma_core::link::{PowerPlan, RateReport};
use noma_core::{snr_db_to_power, UserGrid};

use crate::config::{snr_sweep, CsiConfig, ExperimentConfig, FeedbackScheme, PowerPoint, PowerScheme, Table};
use crate::plots::{plot_script, PlotSpec};
use crate::results::{report_rows, ResultRow};
use crate::runner;
use crate::LabError;

/// SNR of the mode and joint-optimization figures.
pub const MODE_FIGURE_SNR_DB: f64 = 10.0;
/// SNR of the feedback budget figure.
pub const FEEDBACK_FIGURE_SNR_DB: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Analytic,
    OptimizePower,
    OptimizeFeedback,
    SelectMode,
    Joint,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Validate,
}

impl Command {
    pub const ALL: [Command; 13] = [
        Command::Simulate,
        Command::Analytic,
        Command::OptimizePower,
        Command::OptimizeFeedback,
        Command::SelectMode,
        Command::Joint,
        Command::Fig2,
        Command::Fig3,
        Command::Fig4,
        Command::Fig5,
        Command::Fig6,
        Command::Fig7,
        Command::Validate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Analytic => "analytic",
            Command::OptimizePower => "optimize-power",
            Command::OptimizeFeedback => "optimize-feedback",
            Command::SelectMode => "select-mode",
            Command::Joint => "joint",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Fig5 => "fig5",
            Command::Fig6 => "fig6",
            Command::Fig7 => "fig7",
            Command::Validate => "validate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// Result of one command.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub rows: Vec<ResultRow>,
    pub plot: Option<String>,
    pub summary: Vec<String>,
}

/// Runs a CSV-producing command. `validate` lives in [`crate::validate`].
pub fn run(command: Command, config: &ExperimentConfig) -> Result<Output, LabError> {
    match command {
        Command::Simulate => simulate(config),
        Command::Analytic => analytic(config),
        Command::OptimizePower => optimize_power(config),
        Command::OptimizeFeedback => optimize_feedback(config),
        Command::SelectMode => select_mode(config),
        Command::Joint => joint(config),
        Command::Fig2 => fig2(config),
        Command::Fig3 => fig3(config),
        Command::Fig4 => fig4(config),
        Command::Fig5 => fig5(config),
        Command::Fig6 => fig6(config),
        Command::Fig7 => fig7(config),
        Command::Validate => Err(LabError::config("command", "validate does not produce CSV rows")),
    }
}

/// Builds the power plan of `scheme`; `rho` is only read by the proposed one.
pub fn power_plan(
    scheme: PowerScheme,
    geometry: &SystemGeometry,
    rho: &UserGrid<f64>,
    total_power: f64,
) -> Result<PowerPlan, LabError> {
    Ok(match scheme {
        PowerScheme::Proposed => power_allocation(geometry, rho, total_power)?,
        PowerScheme::Equal => equal_power(geometry, total_power)?,
        PowerScheme::Fixed => fixed_ratio_baseline(geometry, total_power)?,
    })
}

pub fn closed_form(geometry: &SystemGeometry, rho: &UserGrid<f64>, plan: &PowerPlan) -> Result<RateReport, LabError> {
    Ok(closed_form_rates(&RateParams::from_plan(geometry, rho, plan)?)?)
}

fn asymptotic(geometry: &SystemGeometry, rho: &UserGrid<f64>, plan: &PowerPlan) -> Result<RateReport, LabError> {
    Ok(asymptotic_rates(&RateParams::from_plan(geometry, rho, plan)?)?)
}

fn format_grid<T: fmt::Display>(g: &UserGrid<T>) -> String {
    (0..g.clusters())
        .map(|n| {
            let row: Vec<String> = g.cluster(n).iter().map(|v| format!("{v:.6}")).collect();
            format!("[{}]", row.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn format_bits(g: &UserGrid<u32>) -> String {
    (0..g.clusters())
        .map(|n| format!("{:?}", g.cluster(n)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn mode_label(mode: TransmissionMode) -> String {
    format!("N{}K{}", mode.clusters, mode.users_per_cluster)
}

fn simulate(config: &ExperimentConfig) -> Result<Output, LabError> {
    let g = &config.geometry;
    let csi = config.csi.spec(g)?;
    let rho = csi.accuracies(g)?;
    let plans = config
        .power
        .points
        .iter()
        .map(|p| power_plan(config.power.scheme, g, &rho, p.total_power))
        .collect::<Result<Vec<_>, _>>()?;
    let reports = runner::monte_carlo_sweep(g, &csi, &plans, config.trials, config.seed)?;
    let mut out = Output::default();
    for (p, r) in config.power.points.iter().zip(&reports) {
        out.rows.extend(report_rows("simulate", p.var, p.value, r, None));
        out.summary.push(format!(
            "{} = {}: sum rate {:.4} b/s/Hz, order violations {:.4}",
            p.var, p.value, r.sum_rate, r.order_violation_frac
        ));
    }
    Ok(out)
}

fn analytic(config: &ExperimentConfig) -> Result<Output, LabError> {
    let g = &config.geometry;
    let rho = config.csi.accuracies(g)?;
    let mut out = Output::default();
    for p in &config.power.points {
        let plan = power_plan(config.power.scheme, g, &rho, p.total_power)?;
        let cf = closed_form(g, &rho, &plan)?;
        out.rows.extend(report_rows("analytic", p.var, p.value, &cf, None));
        out.rows.extend(report_rows("analytic", p.var, p.value, &asymptotic(g, &rho, &plan)?, None));
        out.summary.push(format!("{} = {}: closed-form sum rate {:.4} b/s/Hz", p.var, p.value, cf.sum_rate));
    }
    Ok(out)
}

const POWER_SCHEMES: [PowerScheme; 3] = [PowerScheme::Proposed, PowerScheme::Equal, PowerScheme::Fixed];

/// Closed-form and Monte Carlo sum rates of the three power schemes; Monte
/// Carlo shares draws across schemes and sweep points.
fn compare_power_schemes(
    name: &str,
    geometry: &SystemGeometry,
    csi: &CsiSpec,
    points: &[PowerPoint],
    trials: u64,
    seed: u64,
    out: &mut Output,
) -> Result<(), LabError> {
    let rho = csi.accuracies(geometry)?;
    let schemes: Vec<PowerScheme> = POWER_SCHEMES
        .into_iter()
        .filter(|s| *s != PowerScheme::Fixed || geometry.users_per_cluster() == 2)
        .collect();
    let mut plans = Vec::new();
    for p in points {
        for &s in &schemes {
            plans.push(power_plan(s, geometry, &rho, p.total_power)?);
        }
    }
    let mc = runner::monte_carlo_sweep(geometry, csi, &plans, trials, seed)?;
    for (i, p) in points.iter().enumerate() {
        let mut line = format!("{} = {}:", p.var, p.value);
        for (j, &s) in schemes.iter().enumerate() {
            let idx = i * schemes.len() + j;
            let experiment = format!("{name}/{}", s.as_str());
            let cf = closed_form(geometry, &rho, &plans[idx])?;
            out.rows.extend(report_rows(&experiment, p.var, p.value, &cf, None));
            out.rows.extend(report_rows(&experiment, p.var, p.value, &mc[idx], None));
            line.push_str(&format!(" {} {:.4} (mc {:.4})", s.as_str(), cf.sum_rate, mc[idx].sum_rate));
        }
        out.summary.push(line);
    }
    Ok(())
}

fn optimize_power(config: &ExperimentConfig) -> Result<Output, LabError> {
    let g = &config.geometry;
    let csi = config.csi.spec(g)?;
    let rho = csi.accuracies(g)?;
    let mut out = Output::default();
    for p in &config.power.points {
        let plan = power_allocation(g, &rho, p.total_power)?;
        out.summary
            .push(format!("{} = {}: proposed powers {}", p.var, p.value, format_grid(&plan.power)));
    }
    compare_power_schemes("optimize-power", g, &csi, &config.power.points, config.trials, config.seed, &mut out)?;
    Ok(out)
}

/// Equal and optimized integer bit plans under a power scheme whose
/// proposed variant is driven by the equal-feedback accuracy.
fn compare_feedback_schemes(
    name: &str,
    geometry: &SystemGeometry,
    scheme: PowerScheme,
    total_bits: u32,
    point: PowerPoint,
    trials: u64,
    seed: u64,
    out: &mut Output,
) -> Result<(), LabError> {
    let m = geometry.antennas();
    let (nc, kc) = (geometry.clusters(), geometry.users_per_cluster());
    let equal = FeedbackPlan::equal(nc, kc, total_bits);
    let plan = power_plan(scheme, geometry, &equal.accuracies(m)?, point.total_power)?;
    let optimized = feedback_allocation(geometry, &plan.cluster_powers(), m, total_bits)?;
    for (fs, bits) in [(FeedbackScheme::Equal, &equal), (FeedbackScheme::Optimized, &optimized)] {
        let experiment = format!("{name}/{}", fs.as_str());
        let rho = bits.accuracies(m)?;
        let cf = closed_form(geometry, &rho, &plan)?;
        let csi = CsiSpec::Fdd { bits: bits.bits.clone() };
        let mc = runner::monte_carlo_rates(geometry, &csi, &plan, trials, seed)?;
        out.rows.extend(report_rows(&experiment, point.var, point.value, &cf, None));
        out.rows.extend(report_rows(&experiment, point.var, point.value, &mc, None));
        out.summary.push(format!(
            "{} = {}: {} bits {} -> closed-form {:.4} (mc {:.4})",
            point.var,
            point.value,
            fs.as_str(),
            format_bits(&bits.bits),
            cf.sum_rate,
            mc.sum_rate
        ));
    }
    Ok(())
}

fn optimize_feedback(config: &ExperimentConfig) -> Result<Output, LabError> {
    let total_bits = config.feedback.total_bits()?;
    let mut out = Output::default();
    for &p in &config.power.points {
        compare_feedback_schemes(
            "optimize-feedback",
            &config.geometry,
            config.power.scheme,
            total_bits,
            p,
            config.trials,
            config.seed,
            &mut out,
        )?;
    }
    Ok(out)
}

/// Users of a configuration with their CSI resources, kept together when the
/// population is re-clustered into another mode.
#[derive(Debug, Clone)]
pub struct UserPool {
    antennas: usize,
    alpha: Vec<f64>,
    csi: PoolCsi,
}

#[derive(Debug, Clone)]
enum PoolCsi {
    Direct(Vec<f64>),
    Tdd { tau: usize, pilot_power: Vec<f64> },
    Fdd(Vec<u32>),
}

fn flatten<T: Clone>(t: &Table<T>, geometry: &SystemGeometry, field: &str) -> Result<Vec<T>, LabError> {
    Ok(t.resolve(geometry, field)?.into_vec())
}

impl UserPool {
    pub fn new(geometry: &SystemGeometry, csi: &CsiConfig) -> Result<Self, LabError> {
        let csi = match csi {
            CsiConfig::Direct { rho } => PoolCsi::Direct(flatten(rho, geometry, "csi.rho")?),
            CsiConfig::Tdd { tau, pilot_power } => PoolCsi::Tdd {
                tau: *tau,
                pilot_power: flatten(pilot_power, geometry, "csi.pilot_power")?,
            },
            CsiConfig::Fdd { bits } => PoolCsi::Fdd(flatten(bits, geometry, "csi.bits")?),
        };
        Ok(Self {
            antennas: geometry.antennas(),
            alpha: geometry.alpha().as_slice().to_vec(),
            csi,
        })
    }

    /// Every user with the same accuracy.
    pub fn uniform(antennas: usize, alpha: Vec<f64>, rho: f64) -> Self {
        let n = alpha.len();
        Self {
            antennas,
            alpha,
            csi: PoolCsi::Direct(vec![rho; n]),
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Pool order of the user at each position of the round-robin layout.
    fn layout(&self, mode: TransmissionMode) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.alpha.len()).collect();
        order.sort_by(|&a, &b| self.alpha[b].total_cmp(&self.alpha[a]));
        (0..mode.clusters)
            .flat_map(|n| (0..mode.users_per_cluster).map(move |k| (n, k)))
            .map(|(n, k)| order[k * mode.clusters + n])
            .collect()
    }

    pub fn geometry(&self, mode: TransmissionMode) -> noma_core::Result<SystemGeometry> {
        round_robin_geometry(&self.alpha, mode, self.antennas)
    }

    /// Accuracy of every user once dealt into `geometry`'s mode.
    pub fn rho(&self, geometry: &SystemGeometry) -> noma_core::Result<UserGrid<f64>> {
        let mode = TransmissionMode::new(geometry.clusters(), geometry.users_per_cluster())?;
        let layout = self.layout(mode);
        let data = layout
            .iter()
            .map(|&u| match &self.csi {
                PoolCsi::Direct(r) => Ok(r[u]),
                PoolCsi::Tdd { tau, pilot_power } => {
                    if *tau <= self.alpha.len() {
                        return Err(noma_core::Error::PilotOrthogonality {
                            tau: *tau,
                            users: self.alpha.len(),
                        });
                    }
                    csi_accuracy_tdd(*tau as f64, pilot_power[u], self.alpha[u])
                }
                PoolCsi::Fdd(b) => csi_accuracy_fdd(f64::from(b[u]), self.antennas),
            })
            .collect::<noma_core::Result<Vec<f64>>>()?;
        UserGrid::from_vec(mode.clusters, mode.users_per_cluster, data)
    }
}

/// Closed-form sum rate of every feasible mode for one power scheme.
pub fn mode_scores(pool: &UserPool, scheme: PowerScheme, total_power: f64) -> Result<Vec<ModeScore>, LabError> {
    enumerate_modes(pool.len(), pool.antennas())
        .into_iter()
        .filter(|m| scheme != PowerScheme::Fixed || m.users_per_cluster == 2)
        .map(|mode| {
            let g = pool.geometry(mode)?;
            let rho = pool.rho(&g)?;
            let plan = power_plan(scheme, &g, &rho, total_power)?;
            Ok(ModeScore {
                mode,
                sum_rate: closed_form_sum_rate(&g, &rho, &plan)?,
            })
        })
        .collect()
}

fn mode_rows(
    experiment: &str,
    pool: &UserPool,
    mode: TransmissionMode,
    scheme: PowerScheme,
    point: (&str, f64, f64),
) -> Result<Vec<ResultRow>, LabError> {
    let g = pool.geometry(mode)?;
    let rho = pool.rho(&g)?;
    let plan = power_plan(scheme, &g, &rho, point.2)?;
    Ok(report_rows(experiment, point.0, point.1, &closed_form(&g, &rho, &plan)?, None))
}

fn select_mode(config: &ExperimentConfig) -> Result<Output, LabError> {
    let pool = UserPool::new(&config.geometry, &config.csi)?;
    let scheme = config.power.scheme;
    let mut out = Output::default();
    for p in &config.power.points {
        let scores = mode_scores(&pool, scheme, p.total_power)?;
        let best = best_mode(&scores)?;
        for s in &scores {
            let experiment = format!("select-mode/{}", mode_label(s.mode));
            out.rows
                .extend(mode_rows(&experiment, &pool, s.mode, scheme, (p.var, p.value, p.total_power))?);
        }
        out.rows.extend(mode_rows(
            "select-mode/best",
            &pool,
            best.mode,
            scheme,
            (p.var, p.value, p.total_power),
        )?);
        let listing: Vec<String> = scores
            .iter()
            .map(|s| format!("{} {:.4}", mode_label(s.mode), s.sum_rate))
            .collect();
        out.summary.push(format!(
            "{} = {}: best {} ({})",
            p.var,
            p.value,
            mode_label(best.mode),
            listing.join(", ")
        ));
    }
    Ok(out)
}

fn joint_budget(config: &ExperimentConfig) -> Result<CsiBudget, LabError> {
    match &config.csi {
        CsiConfig::Tdd { tau, pilot_power } => match pilot_power.uniform() {
            Some(&p) => Ok(CsiBudget::Pilot { tau: *tau, pilot_power: p }),
            None => Err(LabError::config("csi.pilot_power", "joint optimization needs one pilot power for all users")),
        },
        CsiConfig::Fdd { bits } => match config.feedback.total_bits {
            Some(b) => Ok(CsiBudget::FeedbackBits(f64::from(b))),
            None => Ok(CsiBudget::FeedbackBits(
                bits.resolve(&config.geometry, "csi.bits")?.iter().map(|&b| f64::from(b)).sum(),
            )),
        },
        CsiConfig::Direct { .. } => Ok(CsiBudget::FeedbackBits(f64::from(config.feedback.total_bits()?))),
    }
}

fn joint_reports(
    experiment: &str,
    geometry: &SystemGeometry,
    rho: &UserGrid<f64>,
    plan: &PowerPlan,
    csi: &CsiSpec,
    trials: u64,
    seed: u64,
    point: (&str, f64),
) -> Result<Vec<ResultRow>, LabError> {
    let cf = closed_form(geometry, rho, plan)?;
    let mc = runner::monte_carlo_rates(geometry, csi, plan, trials, seed)?;
    let mut rows = report_rows(experiment, point.0, point.1, &cf, None);
    rows.extend(report_rows(experiment, point.0, point.1, &mc, None));
    Ok(rows)
}

fn joint(config: &ExperimentConfig) -> Result<Output, LabError> {
    let pool = UserPool::new(&config.geometry, &config.csi)?;
    let budget = joint_budget(config)?;
    let mut out = Output::default();
    for p in &config.power.points {
        let (plans, best) = joint_candidates(pool.len(), pool.antennas(), |m| pool.geometry(m), &budget, p.total_power)?;
        for (i, plan) in plans.iter().enumerate() {
            let csi = match &plan.feedback {
                Some(f) => CsiSpec::Fdd { bits: f.bits.clone() },
                None => CsiSpec::Direct { rho: plan.rho.clone() },
            };
            let experiment = format!("joint/{}", mode_label(plan.mode));
            let point = (p.var, p.value);
            let rows = joint_reports(
                &experiment,
                &plan.geometry,
                &plan.rho,
                &plan.power,
                &csi,
                config.trials,
                config.seed,
                point,
            )?;
            if i == best {
                out.rows.extend(rows.iter().cloned().map(|mut r| {
                    r.experiment = "joint/best".to_string();
                    r
                }));
            }
            out.rows.extend(rows);
            let bits = plan
                .feedback
                .as_ref()
                .map_or_else(|| "pilot CSI".to_string(), |f| format!("bits {}", format_bits(&f.bits)));
            out.summary.push(format!(
                "{} = {}: {}{} closed-form {:.4}, powers {}, {}",
                p.var,
                p.value,
                mode_label(plan.mode),
                if i == best { " (best)" } else { "" },
                plan.sum_rate,
                format_grid(&plan.power.power),
                bits
            ));
        }
    }
    Ok(out)
}

fn table1_direct() -> (SystemGeometry, CsiSpec) {
    (SystemGeometry::table1(), CsiSpec::Direct { rho: table1_rho() })
}

fn fig2(config: &ExperimentConfig) -> Result<Output, LabError> {
    let (g, csi) = table1_direct();
    let rho = csi.accuracies(&g)?;
    let points = snr_sweep(0.0, 40.0, 5.0)?;
    let plans = points
        .iter()
        .map(|p| equal_power(&g, p.total_power))
        .collect::<noma_core::Result<Vec<_>>>()?;
    let mc = runner::monte_carlo_sweep(&g, &csi, &plans, config.trials, config.seed)?;
    let mut out = Output::default();
    for ((p, plan), m) in points.iter().zip(&plans).zip(&mc) {
        let cf = closed_form(&g, &rho, plan)?;
        out.rows.extend(report_rows("fig2", p.var, p.value, &cf, Some(0)));
        out.rows.extend(report_rows("fig2", p.var, p.value, m, Some(0)));
        out.summary.push(format!(
            "{} dB: MU(1,1) {:.4} / {:.4}, MU(1,2) {:.4} / {:.4} (closed-form / mc)",
            p.value,
            cf.rate[(0, 0)],
            m.rate[(0, 0)],
            cf.rate[(0, 1)],
            m.rate[(0, 1)]
        ));
    }
    out.plot = Some(plot_script(&PlotSpec {
        csv: "fig2.csv",
        image: "fig2.png",
        xlabel: "SNR (dB)",
        ylabel: "Average rate (b/s/Hz)",
        per_user: true,
    }));
    Ok(out)
}

fn fig3(config: &ExperimentConfig) -> Result<Output, LabError> {
    let (g, csi) = table1_direct();
    let mut out = Output::default();
    compare_power_schemes("fig3", &g, &csi, &snr_sweep(0.0, 40.0, 5.0)?, config.trials, config.seed, &mut out)?;
    out.plot = Some(plot_script(&PlotSpec {
        csv: "fig3.csv",
        image: "fig3.png",
        xlabel: "SNR (dB)",
        ylabel: "Sum rate (b/s/Hz)",
        per_user: false,
    }));
    Ok(out)
}

fn fig4(config: &ExperimentConfig) -> Result<Output, LabError> {
    let g = SystemGeometry::table1();
    let mut out = Output::default();
    for p in snr_sweep(0.0, 40.0, 5.0)? {
        compare_feedback_schemes(
            "fig4",
            &g,
            PowerScheme::Equal,
            crate::config::TABLE1_TOTAL_BITS,
            p,
            config.trials,
            config.seed,
            &mut out,
        )?;
    }
    out.plot = Some(plot_script(&PlotSpec {
        csv: "fig4.csv",
        image: "fig4.png",
        xlabel: "SNR (dB)",
        ylabel: "Sum rate (b/s/Hz)",
        per_user: false,
    }));
    Ok(out)
}

/// Feedback budgets of the feedback figure.
pub fn fig5_budgets() -> Vec<u32> {
    (12..=42).step_by(6).collect()
}

fn fig5(config: &ExperimentConfig) -> Result<Output, LabError> {
    let g = SystemGeometry::table1();
    let total_power = snr_db_to_power(FEEDBACK_FIGURE_SNR_DB);
    let mut out = Output::default();
    for b in fig5_budgets() {
        let point = PowerPoint {
            var: "total_bits",
            value: f64::from(b),
            total_power,
        };
        compare_feedback_schemes("fig5", &g, PowerScheme::Equal, b, point, config.trials, config.seed, &mut out)?;
    }
    out.plot = Some(plot_script(&PlotSpec {
        csv: "fig5.csv",
        image: "fig5.png",
        xlabel: "Total feedback bits",
        ylabel: "Average rate (b/s/Hz)",
        per_user: true,
    }));
    Ok(out)
}

/// Uniform accuracy grid `0, 0.05, ..., to` (inclusive when reachable).
pub fn rho_grid(to: f64) -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) * 0.05).filter(|r| *r <= to + 1e-12).collect()
}

fn table1_alpha_flat() -> Vec<f64> {
    SystemGeometry::table1().alpha().as_slice().to_vec()
}

fn fig6(_config: &ExperimentConfig) -> Result<Output, LabError> {
    let alpha = table1_alpha_flat();
    let total_power = snr_db_to_power(MODE_FIGURE_SNR_DB);
    let mut out = Output::default();
    for rho in rho_grid(1.0) {
        let pool = UserPool::uniform(6, alpha.clone(), rho);
        let scores = mode_scores(&pool, PowerScheme::Equal, total_power)?;
        let best = best_mode(&scores)?;
        let point = ("rho", rho, total_power);
        for s in &scores {
            let experiment = format!("fig6/{}", mode_label(s.mode));
            out.rows.extend(mode_rows(&experiment, &pool, s.mode, PowerScheme::Equal, point)?);
        }
        out.rows
            .extend(mode_rows("fig6/dynamic", &pool, best.mode, PowerScheme::Equal, point)?);
        out.summary
            .push(format!("rho = {rho:.2}: best {} {:.4}", mode_label(best.mode), best.sum_rate));
    }
    out.plot = Some(plot_script(&PlotSpec {
        csv: "fig6.csv",
        image: "fig6.png",
        xlabel: "CSI accuracy",
        ylabel: "Sum rate (b/s/Hz)",
        per_user: false,
    }));
    Ok(out)
}

/// Total feedback bits at which equal allocation gives every user accuracy `rho`.
pub fn equivalent_budget(rho: f64, users: usize, antennas: usize) -> f64 {
    -(users as f64) * (antennas as f64 - 1.0) * (1.0 - rho).log2()
}

/// The three schemes compared at one equal-feedback accuracy.
#[derive(Debug, Clone)]
pub struct JointComparison {
    pub joint: noma_core::allocation::JointPlan,
    pub fixed: RateReport,
    pub fixed_geometry: SystemGeometry,
    pub fixed_plan: PowerPlan,
}

/// Joint optimization and the fixed `(3, 2)` NOMA scheme at the budget that
/// gives accuracy `rho` under equal feedback.
pub fn joint_vs_fixed(alpha: &[f64], antennas: usize, rho: f64, total_power: f64) -> Result<JointComparison, LabError> {
    let users = alpha.len();
    let pool = UserPool::uniform(antennas, alpha.to_vec(), rho);
    let budget = CsiBudget::FeedbackBits(equivalent_budget(rho, users, antennas));
    let (mut plans, best) = joint_candidates(users, antennas, |m| pool.geometry(m), &budget, total_power)?;
    let fixed_mode = TransmissionMode::new(3, users / 3)?;
    let fixed_geometry = pool.geometry(fixed_mode)?;
    let fixed_rho = pool.rho(&fixed_geometry)?;
    let fixed_plan = equal_power(&fixed_geometry, total_power)?;
    let fixed = closed_form(&fixed_geometry, &fixed_rho, &fixed_plan)?;
    Ok(JointComparison {
        joint: plans.swap_remove(best),
        fixed,
        fixed_geometry,
        fixed_plan,
    })
}

fn fig7(config: &ExperimentConfig) -> Result<Output, LabError> {
    let alpha = table1_alpha_flat();
    let total_power = snr_db_to_power(MODE_FIGURE_SNR_DB);
    let mut out = Output::default();
    for rho in rho_grid(0.95) {
        let cmp = joint_vs_fixed(&alpha, 6, rho, total_power)?;
        let point = ("rho", rho);
        let j = &cmp.joint;
        let joint_csi = match &j.feedback {
            Some(f) => CsiSpec::Fdd { bits: f.bits.clone() },
            None => CsiSpec::Direct { rho: j.rho.clone() },
        };
        out.rows.extend(joint_reports(
            "fig7/joint",
            &j.geometry,
            &j.rho,
            &j.power,
            &joint_csi,
            config.trials,
            config.seed,
            point,
        )?);
        let fixed_csi = CsiSpec::Direct {
            rho: UserGrid::filled(cmp.fixed_geometry.clusters(), cmp.fixed_geometry.users_per_cluster(), rho),
        };
        let fixed_mc =
            runner::monte_carlo_rates(&cmp.fixed_geometry, &fixed_csi, &cmp.fixed_plan, config.trials, config.seed)?;
        out.rows.extend(report_rows("fig7/fixed", "rho", rho, &cmp.fixed, None));
        out.rows.extend(report_rows("fig7/fixed", "rho", rho, &fixed_mc, None));
        let tdma = runner::tdma_mrt_baseline(&cmp.fixed_geometry, &fixed_csi, total_power, config.trials, config.seed)?;
        out.rows.extend(report_rows("fig7/tdma", "rho", rho, &tdma, None));
        out.summary.push(format!(
            "rho = {rho:.2}: joint {} {:.4}, fixed {:.4}, tdma {:.4}",
            mode_label(j.mode),
            j.sum_rate,
            cmp.fixed.sum_rate,
            tdma.sum_rate
        ));
    }
    out.plot = Some(plot_script(&PlotSpec {
        csv: "fig7.csv",
        image: "fig7.png",
        xlabel: "CSI accuracy",
        ylabel: "Sum rate (b/s/Hz)",
        per_user: false,
    }));
    Ok(out)
}
