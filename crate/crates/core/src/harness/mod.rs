//! Seeded experiment runner: builds scenarios from a config, runs the
//! selected algorithms over seeds and sweep points, and writes CSV tables
//! and plot data.

mod output;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::baselines::{aauco, gucaa, gucro, rucaa};
use crate::dashf::{fixed_outcome, run_dashf, RunOutcome, RunTrace};
use crate::error::{Result, TcrError};
use crate::scenario::units::{Dimension, Quantity};
use crate::scenario::{generate_scenario, ScenarioConfig};

pub use output::{quantile, summarize, write_outputs, SummaryRow, RESULTS_HEADER, SUMMARY_HEADER};
pub use plot::{emit_plot_data, render_svg, PlotKind, PlotSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Dashf,
    Rucaa,
    Gucaa,
    Aauco,
    Gucro,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Dashf, Algorithm::Gucro, Algorithm::Aauco, Algorithm::Gucaa, Algorithm::Rucaa];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dashf => "dashf",
            Algorithm::Rucaa => "rucaa",
            Algorithm::Gucaa => "gucaa",
            Algorithm::Aauco => "aauco",
            Algorithm::Gucro => "gucro",
        }
    }

    /// Parses a single name or `all`.
    pub fn parse_selector(text: &str) -> Result<Vec<Algorithm>> {
        if text.eq_ignore_ascii_case("all") {
            return Ok(Self::ALL.to_vec());
        }
        text.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = TcrError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| TcrError::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    None,
    /// Per-server bandwidth.
    Bandwidth,
    /// Per-server CPU frequency.
    Frequency,
    /// Delay and energy weight pairs.
    Weights,
    /// Number of users and servers.
    Topology,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::None => "none",
            SweepKind::Bandwidth => "bandwidth",
            SweepKind::Frequency => "frequency",
            SweepKind::Weights => "weights",
            SweepKind::Topology => "topology",
        }
    }

    /// Values used when the config lists none.
    pub fn default_points(self) -> Vec<SweepPoint> {
        match self {
            SweepKind::None => vec![SweepPoint::Base],
            SweepKind::Bandwidth => (1..=10).map(|k| SweepPoint::Bandwidth(k as f64 * 10e6)).collect(),
            SweepKind::Frequency => (1..=10).map(|k| SweepPoint::Frequency(k as f64 * 20e9)).collect(),
            SweepKind::Weights => {
                vec![SweepPoint::Weights(0.1, 0.9), SweepPoint::Weights(0.5, 0.5), SweepPoint::Weights(0.9, 0.1)]
            }
            SweepKind::Topology => vec![SweepPoint::Topology(10, 2), SweepPoint::Topology(20, 3)],
        }
    }
}

impl FromStr for SweepKind {
    type Err = TcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "" => Ok(SweepKind::None),
            "bandwidth" | "b_max" => Ok(SweepKind::Bandwidth),
            "frequency" | "f_max_m" => Ok(SweepKind::Frequency),
            "weights" => Ok(SweepKind::Weights),
            "topology" => Ok(SweepKind::Topology),
            _ => Err(TcrError::InvalidConfig(format!(
                "unknown sweep {s:?} (expected none, bandwidth, frequency, weights or topology)"
            ))),
        }
    }
}

/// One sweep coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPoint {
    Base,
    Bandwidth(f64),
    Frequency(f64),
    /// `(omega_t, omega_e)`.
    Weights(f64, f64),
    /// `(users, servers)`.
    Topology(usize, usize),
}

impl SweepPoint {
    pub fn label(&self) -> String {
        match self {
            SweepPoint::Base => "base".into(),
            SweepPoint::Bandwidth(v) | SweepPoint::Frequency(v) => format!("{v}"),
            SweepPoint::Weights(t, e) => format!("{t}/{e}"),
            SweepPoint::Topology(n, m) => format!("{n}x{m}"),
        }
    }

    /// Abscissa for plots: MHz, GHz, the delay weight, or the user count.
    pub fn x(&self) -> f64 {
        match self {
            SweepPoint::Base => 0.0,
            SweepPoint::Bandwidth(v) => v / 1e6,
            SweepPoint::Frequency(v) => v / 1e9,
            SweepPoint::Weights(t, _) => *t,
            SweepPoint::Topology(n, _) => *n as f64,
        }
    }

    pub fn apply(&self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = base.clone();
        match *self {
            SweepPoint::Base => {}
            SweepPoint::Bandwidth(v) => cfg.server.b_max = v,
            SweepPoint::Frequency(v) => cfg.server.f_max = v,
            SweepPoint::Weights(t, e) => {
                cfg.params.omega_t = t;
                cfg.params.omega_e = e;
            }
            SweepPoint::Topology(n, m) => {
                cfg.n_users = n;
                cfg.n_servers = m;
            }
        }
        cfg
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SweepPoint::Base => true,
            SweepPoint::Bandwidth(v) | SweepPoint::Frequency(v) => v > 0.0 && v.is_finite(),
            SweepPoint::Weights(t, e) => t >= 0.0 && e >= 0.0 && ((t + e) - 1.0).abs() <= 1e-9,
            SweepPoint::Topology(n, m) => n > 0 && m > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(TcrError::InvalidConfig(format!("invalid sweep value {}", self.label())))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub sweep: SweepKind,
    pub points: Vec<SweepPoint>,
    pub out_dir: PathBuf,
    /// Write one trace CSV per run.
    pub trace: bool,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            algorithms: Algorithm::ALL.to_vec(),
            seeds: (1..=5).collect(),
            sweep: SweepKind::None,
            points: vec![SweepPoint::Base],
            out_dir: PathBuf::from("results"),
            trace: false,
            workers: 1,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct RawExperimentFile {
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    sweep: RawSweep,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    algorithm: Option<String>,
    seeds: Option<Vec<u64>>,
    out: Option<String>,
    trace: Option<bool>,
    workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kind: Option<String>,
    values: Option<Vec<toml::Value>>,
}

fn sweep_value(kind: SweepKind, v: &toml::Value) -> Result<SweepPoint> {
    let bad = || TcrError::InvalidConfig(format!("bad {} sweep value {v}", kind.name()));
    let quantity = |dim| -> Result<f64> {
        let q: Quantity = v.clone().try_into().map_err(|_| bad())?;
        q.to_si(dim)
    };
    let pair = || -> Result<(f64, f64)> {
        let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
        let num = |x: &toml::Value| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)).ok_or_else(bad);
        Ok((num(&arr[0])?, num(&arr[1])?))
    };
    let point = match kind {
        SweepKind::None => return Err(TcrError::InvalidConfig("sweep values given without a sweep kind".into())),
        SweepKind::Bandwidth => SweepPoint::Bandwidth(quantity(Dimension::Frequency)?),
        SweepKind::Frequency => SweepPoint::Frequency(quantity(Dimension::Frequency)?),
        SweepKind::Weights => {
            let (t, e) = pair()?;
            SweepPoint::Weights(t, e)
        }
        SweepKind::Topology => {
            let (n, m) = pair()?;
            if n.fract() != 0.0 || m.fract() != 0.0 || n < 1.0 || m < 1.0 {
                return Err(bad());
            }
            SweepPoint::Topology(n as usize, m as usize)
        }
    };
    point.validate()?;
    Ok(point)
}

impl ExperimentConfig {
    /// Reads scenario sections plus `[experiment]` and `[sweep]`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario = ScenarioConfig::from_toml_str(text)?;
        let raw: RawExperimentFile = toml::from_str(text).map_err(|e| TcrError::InvalidConfig(e.to_string()))?;
        let mut cfg = Self { scenario, ..Self::default() };
        let e = raw.experiment;
        if let Some(a) = e.algorithm {
            cfg.algorithms = Algorithm::parse_selector(&a)?;
        }
        if let Some(s) = e.seeds {
            cfg.seeds = s;
        }
        if let Some(o) = e.out {
            cfg.out_dir = PathBuf::from(o);
        }
        if let Some(t) = e.trace {
            cfg.trace = t;
        }
        if let Some(w) = e.workers {
            cfg.workers = w;
        }
        if let Some(k) = raw.sweep.kind {
            cfg.set_sweep(k.parse()?);
        }
        if let Some(values) = raw.sweep.values {
            cfg.points = values.iter().map(|v| sweep_value(cfg.sweep, v)).collect::<Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Switches the sweep kind and resets the points to its defaults.
    pub fn set_sweep(&mut self, kind: SweepKind) {
        self.sweep = kind;
        self.points = kind.default_points();
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(TcrError::InvalidConfig("no algorithm selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(TcrError::InvalidConfig("seed list is empty".into()));
        }
        if self.points.is_empty() {
            return Err(TcrError::InvalidConfig("sweep has no values".into()));
        }
        if self.workers == 0 {
            return Err(TcrError::InvalidConfig("worker count must be at least 1".into()));
        }
        for p in &self.points {
            p.validate()?;
            p.apply(&self.scenario).validate()?;
        }
        self.scenario.validate()
    }
}

/// One row per (seed, algorithm, sweep point).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Position of the sweep point in the config.
    pub point_index: usize,
    pub point: SweepPoint,
    pub tcr: f64,
    pub t_total: f64,
    pub e_total: f64,
    pub v_trust: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub row: ResultRow,
    pub trace: RunTrace,
}

/// Runs one algorithm on one scenario.
pub fn run_algorithm(sc: &crate::scenario::Scenario, algorithm: Algorithm, seed: u64) -> Result<RunOutcome> {
    let tols = &sc.params.tolerances;
    match algorithm {
        Algorithm::Dashf => run_dashf(sc, tols),
        Algorithm::Gucro => gucro(sc, tols),
        Algorithm::Aauco => aauco(sc, tols),
        Algorithm::Gucaa => fixed_outcome(sc, &gucaa(sc)?),
        Algorithm::Rucaa => fixed_outcome(sc, &rucaa(sc, seed)?),
    }
}

fn run_job(cfg: &ExperimentConfig, point_index: usize, algorithm: Algorithm, seed: u64) -> Result<RunRecord> {
    let point = cfg.points[point_index];
    let label = format!("{algorithm} at sweep point {} with seed {seed}", point.label());
    let started = Instant::now();
    let sc = generate_scenario(&point.apply(&cfg.scenario), seed).map_err(|e| e.context(label.clone()))?;
    let out = run_algorithm(&sc, algorithm, seed).map_err(|e| e.context(label))?;
    Ok(RunRecord {
        row: ResultRow {
            seed,
            algorithm,
            point_index,
            point,
            tcr: out.metrics.tcr,
            t_total: out.metrics.t_total,
            e_total: out.metrics.e_total,
            v_trust: out.metrics.v_trust,
            outer_iterations: out.iterations,
            converged: out.converged,
            wall_s: started.elapsed().as_secs_f64(),
        },
        trace: out.trace,
    })
}

/// Runs every (sweep point, algorithm, seed) combination on up to
/// `cfg.workers` threads. Records come back sorted by sweep point,
/// algorithm and seed regardless of completion order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for p in 0..cfg.points.len() {
        for &a in &cfg.algorithms {
            for &s in &cfg.seeds {
                jobs.push((p, a, s));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| TcrError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let mut records: Vec<RunRecord> =
        pool.install(|| jobs.par_iter().map(|&(p, a, s)| run_job(cfg, p, a, s)).collect::<Result<_>>())?;
    records.sort_by(|a, b| {
        (a.row.point_index, a.row.algorithm, a.row.seed).cmp(&(b.row.point_index, b.row.algorithm, b.row.seed))
    });
    Ok(records)
}
