//! Experiment configuration files.
//!
//! The format is TOML. Every key is optional when `preset = "table1"` is set;
//! explicit sections override the preset. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use noma_core::beamforming::BeamWeights;
use noma_core::channel::{table1_rho, CsiSpec, SystemGeometry};
use noma_core::UserGrid;
use serde::Deserialize;

use crate::LabError;

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT_DIR: &str = "results";
/// Feedback budget of the reference configuration.
pub const TABLE1_TOTAL_BITS: u32 = 12;

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    preset: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    beam_weights: Option<String>,
    geometry: Option<RawGeometry>,
    csi: Option<RawCsi>,
    power: Option<RawPower>,
    feedback: Option<RawFeedback>,
    outputs: Option<RawOutputs>,
}

#[derive(Debug, Deserialize)]
struct RawGeometry {
    antennas: Option<usize>,
    clusters: Option<usize>,
    users_per_cluster: Option<usize>,
    alpha: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum UserTable<T> {
    Uniform(T),
    PerUser(Vec<Vec<T>>),
}

#[derive(Debug, Deserialize)]
struct RawCsi {
    mode: Option<String>,
    rho: Option<UserTable<f64>>,
    tau: Option<usize>,
    pilot_power: Option<UserTable<f64>>,
    bits: Option<UserTable<u32>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSnr {
    Point(f64),
    Sweep(Vec<f64>),
}

#[derive(Debug, Deserialize)]
struct RawPower {
    scheme: Option<String>,
    snr_db: Option<RawSnr>,
    total_power: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawFeedback {
    scheme: Option<String>,
    total_bits: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct RawOutputs {
    dir: Option<PathBuf>,
}

/// Per-user CSI source as written in the file. Uniform entries keep their
/// scalar form so that re-clustered geometries can reuse them.
#[derive(Debug, Clone, PartialEq)]
pub enum CsiConfig {
    Direct { rho: Table<f64> },
    Tdd { tau: usize, pilot_power: Table<f64> },
    Fdd { bits: Table<u32> },
}

/// A scalar applied to every user, or an explicit per-user grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Table<T> {
    Uniform(T),
    PerUser(UserGrid<T>),
}

impl<T: Clone> Table<T> {
    /// Expands the table to the shape of `geometry`.
    pub fn resolve(&self, geometry: &SystemGeometry, field: &str) -> Result<UserGrid<T>, LabError> {
        match self {
            Table::Uniform(v) => Ok(UserGrid::filled(geometry.clusters(), geometry.users_per_cluster(), v.clone())),
            Table::PerUser(g) if g.same_shape(geometry.alpha()) => Ok(g.clone()),
            Table::PerUser(g) => Err(LabError::config(
                field,
                format!(
                    "expected {} x {} entries, got {} x {}",
                    geometry.clusters(),
                    geometry.users_per_cluster(),
                    g.clusters(),
                    g.users_per_cluster()
                ),
            )),
        }
    }

    pub fn uniform(&self) -> Option<&T> {
        match self {
            Table::Uniform(v) => Some(v),
            Table::PerUser(_) => None,
        }
    }
}

impl CsiConfig {
    /// The core CSI specification for `geometry`.
    pub fn spec(&self, geometry: &SystemGeometry) -> Result<CsiSpec, LabError> {
        Ok(match self {
            CsiConfig::Direct { rho } => CsiSpec::Direct {
                rho: rho.resolve(geometry, "csi.rho")?,
            },
            CsiConfig::Tdd { tau, pilot_power } => CsiSpec::Tdd {
                tau: *tau,
                pilot_power: pilot_power.resolve(geometry, "csi.pilot_power")?,
            },
            CsiConfig::Fdd { bits } => CsiSpec::Fdd {
                bits: bits.resolve(geometry, "csi.bits")?,
            },
        })
    }

    pub fn accuracies(&self, geometry: &SystemGeometry) -> Result<UserGrid<f64>, LabError> {
        Ok(self.spec(geometry)?.accuracies(geometry)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerScheme {
    /// Cluster power inversely proportional to the interference coefficient.
    Proposed,
    Equal,
    /// 1:4 split inside each two-user cluster.
    Fixed,
}

impl PowerScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerScheme::Proposed => "proposed",
            PowerScheme::Equal => "equal",
            PowerScheme::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackScheme {
    Equal,
    Optimized,
}

impl FeedbackScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackScheme::Equal => "equal",
            FeedbackScheme::Optimized => "optimized",
        }
    }
}

/// One transmit power operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    /// Sweep variable name written to the CSV.
    pub var: &'static str,
    pub value: f64,
    /// Linear total transmit power.
    pub total_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub scheme: PowerScheme,
    pub points: Vec<PowerPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackConfig {
    pub scheme: FeedbackScheme,
    pub total_bits: Option<u32>,
}

impl FeedbackConfig {
    pub fn total_bits(&self) -> Result<u32, LabError> {
        self.total_bits
            .ok_or_else(|| LabError::config("feedback.total_bits", "required by this command"))
    }
}

/// Fully validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: SystemGeometry,
    pub csi: CsiConfig,
    pub power: PowerConfig,
    pub feedback: FeedbackConfig,
    pub beam_weights: BeamWeights,
    pub trials: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// The reference configuration with all defaults applied.
    pub fn table1() -> Self {
        Self {
            geometry: SystemGeometry::table1(),
            csi: CsiConfig::Direct {
                rho: Table::PerUser(table1_rho()),
            },
            power: default_power(),
            feedback: FeedbackConfig {
                scheme: FeedbackScheme::Equal,
                total_bits: Some(TABLE1_TOTAL_BITS),
            },
            beam_weights: BeamWeights::Uniform,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

fn default_power() -> PowerConfig {
    PowerConfig {
        scheme: PowerScheme::Equal,
        points: snr_sweep(0.0, 40.0, 5.0).expect("valid default sweep"),
    }
}

/// Inclusive SNR sweep `start, start + step, ..., stop` in dB.
pub fn snr_sweep(start: f64, stop: f64, step: f64) -> Result<Vec<PowerPoint>, LabError> {
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) || stop < start {
        return Err(LabError::config(
            "power.snr_db",
            "sweep must be [start, stop, step] with start <= stop and step > 0",
        ));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let value = start + i as f64 * step;
            PowerPoint {
                var: "snr_db",
                value,
                total_power: noma_core::snr_db_to_power(value),
            }
        })
        .collect())
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, LabError> {
    let de = toml::Deserializer::parse(text).map_err(|e| LabError::Parse(e.to_string()))?;
    let mut unknown = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(de, |path| unknown.push(dotted(&path)))
        .map_err(|e| LabError::Parse(e.to_string()))?;
    if !unknown.is_empty() {
        unknown.sort();
        return Err(LabError::UnknownKeys(unknown));
    }
    build(raw)
}

/// Dotted key path with optional and newtype wrappers elided.
fn dotted(path: &serde_ignored::Path<'_>) -> String {
    use serde_ignored::Path;
    let join = |parent: &Path<'_>, leaf: String| match dotted(parent) {
        p if p.is_empty() => leaf,
        p => format!("{p}.{leaf}"),
    };
    match path {
        Path::Root => String::new(),
        Path::Map { parent, key } => join(parent, key.clone()),
        Path::Seq { parent, index } => join(parent, index.to_string()),
        Path::Some { parent } | Path::NewtypeStruct { parent } | Path::NewtypeVariant { parent } => dotted(parent),
    }
}

fn build(raw: RawConfig) -> Result<ExperimentConfig, LabError> {
    let base = match raw.preset.as_deref() {
        None => None,
        Some("table1") => Some(ExperimentConfig::table1()),
        Some(other) => return Err(LabError::config("preset", format!("unknown preset {other:?}"))),
    };

    let geometry = match (raw.geometry, &base) {
        (Some(g), _) => build_geometry(g)?,
        (None, Some(b)) => b.geometry.clone(),
        (None, None) => return Err(LabError::config("geometry", "section is required without a preset")),
    };

    let csi = match (raw.csi, &base) {
        (Some(c), _) => build_csi(c)?,
        (None, Some(b)) => b.csi.clone(),
        (None, None) => return Err(LabError::config("csi", "section is required without a preset")),
    };
    // Resolving once validates shapes and ranges against the geometry.
    csi.accuracies(&geometry)?;

    let power = match raw.power {
        Some(p) => build_power(p)?,
        None => default_power(),
    };
    if power.scheme == PowerScheme::Fixed && geometry.users_per_cluster() != 2 {
        return Err(LabError::config("power.scheme", "fixed needs exactly two users per cluster"));
    }

    let default_bits = base.as_ref().and_then(|b| b.feedback.total_bits);
    let feedback = match raw.feedback {
        Some(f) => FeedbackConfig {
            scheme: match f.scheme.as_deref() {
                None | Some("equal") => FeedbackScheme::Equal,
                Some("optimized") => FeedbackScheme::Optimized,
                Some(other) => {
                    return Err(LabError::config("feedback.scheme", format!("unknown scheme {other:?}")));
                }
            },
            total_bits: f.total_bits.or(default_bits),
        },
        None => FeedbackConfig {
            scheme: FeedbackScheme::Equal,
            total_bits: default_bits,
        },
    };

    let beam_weights = match raw.beam_weights.as_deref() {
        None | Some("uniform") => BeamWeights::Uniform,
        Some(other) => return Err(LabError::config("beam_weights", format!("unknown policy {other:?}"))),
    };

    let trials = raw.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(LabError::config("trials", "must be positive"));
    }

    Ok(ExperimentConfig {
        geometry,
        csi,
        power,
        feedback,
        beam_weights,
        trials,
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        out_dir: raw
            .outputs
            .and_then(|o| o.dir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    })
}

fn build_geometry(g: RawGeometry) -> Result<SystemGeometry, LabError> {
    let antennas = g
        .antennas
        .ok_or_else(|| LabError::config("geometry.antennas", "is required"))?;
    let rows = g.alpha.ok_or_else(|| LabError::config("geometry.alpha", "is required"))?;
    let alpha = UserGrid::from_rows(rows).map_err(|_| LabError::config("geometry.alpha", "rows must have equal length"))?;
    if alpha.is_empty() {
        return Err(LabError::config("geometry.alpha", "must not be empty"));
    }
    if let Some(n) = g.clusters {
        if n != alpha.clusters() {
            return Err(LabError::config(
                "geometry.alpha",
                format!("declared {n} clusters but alpha has {} rows", alpha.clusters()),
            ));
        }
    }
    if let Some(k) = g.users_per_cluster {
        if k != alpha.users_per_cluster() {
            return Err(LabError::config(
                "geometry.alpha",
                format!("declared {k} users per cluster but alpha rows have {}", alpha.users_per_cluster()),
            ));
        }
    }
    SystemGeometry::new(antennas, alpha).map_err(|e| match e {
        noma_core::Error::InfeasibleGeometry { .. } => LabError::Model(e),
        other => LabError::config("geometry.alpha", other.to_string()),
    })
}

fn table<T>(t: UserTable<T>, field: &str) -> Result<Table<T>, LabError> {
    match t {
        UserTable::Uniform(v) => Ok(Table::Uniform(v)),
        UserTable::PerUser(rows) => UserGrid::from_rows(rows)
            .map(Table::PerUser)
            .map_err(|_| LabError::config(field, "rows must have equal length")),
    }
}

fn build_csi(c: RawCsi) -> Result<CsiConfig, LabError> {
    let mode = c.mode.as_deref().unwrap_or("direct");
    let stray = |field: &str, present: bool| {
        if present {
            Err(LabError::config(field, format!("not used by csi.mode = {mode:?}")))
        } else {
            Ok(())
        }
    };
    match mode {
        "direct" => {
            stray("csi.tau", c.tau.is_some())?;
            stray("csi.pilot_power", c.pilot_power.is_some())?;
            stray("csi.bits", c.bits.is_some())?;
            let rho = c.rho.ok_or_else(|| LabError::config("csi.rho", "is required for direct CSI"))?;
            Ok(CsiConfig::Direct {
                rho: table(rho, "csi.rho")?,
            })
        }
        "tdd" => {
            stray("csi.rho", c.rho.is_some())?;
            stray("csi.bits", c.bits.is_some())?;
            let tau = c.tau.ok_or_else(|| LabError::config("csi.tau", "is required for TDD"))?;
            let p = c
                .pilot_power
                .ok_or_else(|| LabError::config("csi.pilot_power", "is required for TDD"))?;
            Ok(CsiConfig::Tdd {
                tau,
                pilot_power: table(p, "csi.pilot_power")?,
            })
        }
        "fdd" => {
            stray("csi.rho", c.rho.is_some())?;
            stray("csi.tau", c.tau.is_some())?;
            stray("csi.pilot_power", c.pilot_power.is_some())?;
            let bits = c.bits.ok_or_else(|| LabError::config("csi.bits", "is required for FDD"))?;
            Ok(CsiConfig::Fdd {
                bits: table(bits, "csi.bits")?,
            })
        }
        other => Err(LabError::config("csi.mode", format!("unknown mode {other:?}"))),
    }
}

fn build_power(p: RawPower) -> Result<PowerConfig, LabError> {
    let scheme = match p.scheme.as_deref() {
        None | Some("equal") => PowerScheme::Equal,
        Some("proposed") => PowerScheme::Proposed,
        Some("fixed") => PowerScheme::Fixed,
        Some(other) => return Err(LabError::config("power.scheme", format!("unknown scheme {other:?}"))),
    };
    let points = match (p.snr_db, p.total_power) {
        (Some(_), Some(_)) => {
            return Err(LabError::config("power.total_power", "give either snr_db or total_power"));
        }
        (Some(RawSnr::Point(s)), None) => snr_sweep(s, s, 1.0)?,
        (Some(RawSnr::Sweep(v)), None) => match v[..] {
            [start, stop, step] => snr_sweep(start, stop, step)?,
            _ => return Err(LabError::config("power.snr_db", "sweep must have exactly three entries")),
        },
        (None, Some(t)) => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(LabError::config("power.total_power", "must be positive and finite"));
            }
            vec![PowerPoint {
                var: "total_power",
                value: t,
                total_power: t,
            }]
        }
        (None, None) => default_power().points,
    };
    Ok(PowerConfig { scheme, points })
}
