use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use geomflow_core::exact::{ExactSolution, ROSENAU_PERIOD};
use geomflow_core::flow::Scheme;
use geomflow_core::grid::{rosenau_layout, GridLayout, MIN_NODES};

/// Environment variable that replaces the configured output directory.
pub const OUT_ENV: &str = "GEOMFLOW_OUT";

/// Left end of a log-polar chart when the config leaves it out.
pub const DEFAULT_LOG_POLAR_LO: f64 = -6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Verify,
    Simulate,
    Invariants,
    Rescale,
    Classify,
    Embed,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Verify => "verify",
            Task::Simulate => "simulate",
            Task::Invariants => "invariants",
            Task::Rescale => "rescale",
            Task::Classify => "classify",
            Task::Embed => "embed",
        }
    }
}

/// Where the initial metric comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Exact(ExactSolution),
    Checkpoint(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartChoice {
    /// Cylinder for Rosenau, radial plane otherwise.
    Auto,
    Radial,
    Cylinder,
    LogPolar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub chart: ChartChoice,
    /// Radius on the radial chart, half width on a cylinder, right end of a
    /// log-polar chart.
    pub extent: f64,
    pub n: usize,
    /// Left end of a log-polar chart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t0: f64,
    pub t1: f64,
    #[serde(default)]
    pub outputs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub initial: Initial,
    pub grid: GridConfig,
    pub times: TimeConfig,
    pub cfl: f64,
    pub scheme: Scheme,
    pub tasks: Vec<Task>,
    /// Rescaling levels `j = 1..=levels`.
    #[serde(default = "default_levels")]
    pub levels: u32,
    /// Overrides of the thresholds in [`DEFAULT_TOLERANCES`].
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub out: PathBuf,
}

fn default_levels() -> u32 {
    6
}

/// Thresholds a run is judged against, by key.
pub const DEFAULT_TOLERANCES: [(&str, f64); 7] = [
    ("order_min", 3.0),
    ("order_max", 5.0),
    ("solution_relative", 1e-3),
    ("invariant_relative", 0.01),
    ("profile_distance", 0.02),
    ("isometry", 1e-8),
    ("circumference_relative", 0.01),
];

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text).context("malformed scenario config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.trim().is_empty(), "name must not be empty");
        if let Initial::Exact(sol) = &self.initial {
            sol.validate()?;
        }
        ensure!(self.grid.n >= MIN_NODES, "grid.n must be >= {MIN_NODES}, got {}", self.grid.n);
        ensure!(self.grid.extent > 0.0 && self.grid.extent.is_finite(), "grid.extent must be > 0");
        ensure!(self.cfl > 0.0 && self.cfl <= 1.0, "cfl must lie in (0, 1], got {}", self.cfl);
        ensure!(!self.tasks.is_empty(), "tasks must not be empty");
        ensure!(self.times.t0.is_finite() && self.times.t1.is_finite(), "times must be finite");
        ensure!(self.times.t1 > self.times.t0, "times.t1 must exceed times.t0");
        ensure!(self.levels >= 1, "levels must be >= 1");
        for key in self.tolerances.keys() {
            if !DEFAULT_TOLERANCES.iter().any(|(k, _)| k == key) {
                bail!("unknown tolerance {key:?}");
            }
        }
        if self.grid.lo.is_some() && self.grid.chart != ChartChoice::LogPolar {
            bail!("grid.lo applies to the log_polar chart only");
        }
        self.layout()?;
        Ok(())
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or_else(|| {
            DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == key).map(|p| p.1).expect("known tolerance key")
        })
    }

    pub fn exact(&self) -> Option<ExactSolution> {
        match &self.initial {
            Initial::Exact(sol) => Some(*sol),
            Initial::Checkpoint(_) => None,
        }
    }

    /// Grid layout for exact initial data. Checkpoints carry their own.
    pub fn layout(&self) -> Result<GridLayout> {
        let (extent, n) = (self.grid.extent, self.grid.n);
        let rosenau = matches!(self.initial, Initial::Exact(ExactSolution::Rosenau));
        let layout = match self.grid.chart {
            ChartChoice::Auto if rosenau => rosenau_layout(extent, n)?,
            ChartChoice::Cylinder if rosenau => rosenau_layout(extent, n)?,
            ChartChoice::Auto | ChartChoice::Radial => GridLayout::radial(extent, n)?,
            ChartChoice::Cylinder => GridLayout::cylinder(std::f64::consts::TAU, -extent, extent, n)?,
            ChartChoice::LogPolar => GridLayout::log_polar(self.grid.lo.unwrap_or(DEFAULT_LOG_POLAR_LO), extent, n)?,
        };
        if rosenau && !matches!(layout.chart, geomflow_core::grid::Chart::Cylinder { period } if period == ROSENAU_PERIOD) {
            bail!("rosenau lives on the cylinder chart");
        }
        if !rosenau && matches!(self.initial, Initial::Exact(_)) && self.grid.chart == ChartChoice::Cylinder {
            bail!("only rosenau is sampled on the cylinder chart");
        }
        Ok(layout)
    }

    /// Output directory after the environment override.
    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out.clone(),
        }
    }
}

/// Default grid and time window for inline runs of a family.
pub fn family_defaults(sol: &ExactSolution) -> (GridConfig, TimeConfig) {
    let grid = |extent, n| GridConfig { chart: ChartChoice::Auto, extent, n, lo: None };
    let times = |t0, t1| TimeConfig { t0, t1, outputs: Vec::new() };
    match sol {
        ExactSolution::Rosenau => (grid(20.0, 2000), times(-2.0, -1.0)),
        ExactSolution::Sphere => (grid(4.0, 400), times(-1.0, -0.5)),
        ExactSolution::Cigar { .. } => (grid(50.0, 2000), times(0.0, 1.0)),
        ExactSolution::Flat => (grid(10.0, 400), times(0.0, 1.0)),
        ExactSolution::DsSoliton { .. } => (grid(20.0, 801), times(0.0, 0.5)),
    }
}
