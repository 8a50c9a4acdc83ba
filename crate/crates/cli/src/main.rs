//! `geomflow`: scenario runner for Ricci flow on surfaces.
//!
//! Exit status is 0 when every check passes, 1 when a check or acceptance
//! criterion fails and 2 on input errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use geomflow_core::exact::ExactSolution;
use geomflow_core::flow::Scheme;
use geomflow_core::grid::Chart;

use geomflow::config::{family_defaults, ChartChoice, GridConfig, Initial, ScenarioConfig, Task, TimeConfig, OUT_ENV};
use geomflow::scenario;

const FILES_HELP: &str = "\
Output files (CSV columns are fixed; missing values are written as nan):
  scenario.json             resolved scenario config
  checks.json               one record per check: task, check, value, limit, passed, error
  verify:     residual_convergence.csv   n, h, residual, ratio
  simulate:   rmax_series.csv            t, r_max
              diagnostics.json           f_defect, harnack_defect, harnack_origin,
                                         length_evolution_defect, m_of_t_times, m_of_t_values
              checkpoint_NNN.json        grid at the NNN-th output time
              checkpoint_final.json      grid at the last time reached
  invariants: invariants.csv             t, tau, aperture, circumference, avr, r_max,
                                         hartman_defect_length, hartman_defect_area
              invariants.json            the same rows as records
  rescale:    rescale_jJ.json            pick j, T_j, gamma_j, t_j, x_j, M_j, alpha_j, omega_j,
                                         profile_distance, profile_extent, profile_s, profile_rn
              rescale_picks.json         all picks
  classify:   type_series.csv            T, S, growth
              type_verdict.json          verdict, label, growth
  embed:      surface.csv                s, r, z
              embedding.json             t, isometry_defect, asymptotics
  verify (subcommand): the acceptance suite artifacts and acceptance.json

GEOMFLOW_OUT, when set, replaces the output directory.
Exit status: 0 all checks pass, 1 a check fails, 2 input error.";

#[derive(Parser, Debug)]
#[command(name = "geomflow", version, about = "Ricci flow on surfaces as logarithmic fast diffusion", after_long_help = FILES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario described by a JSON config.
    Run { config: PathBuf },
    /// Run the built-in acceptance suite.
    Verify {
        #[arg(long, default_value = "geomflow-verify")]
        out: PathBuf,
    },
    /// Evolve a family or checkpoint and record R_max and diagnostics.
    Simulate(Inline),
    /// Tabulate invariants at the initial, output and final times.
    Invariants(Inline),
    /// Pick and dilate along backward windows, comparing with the cigar.
    Rescale(Inline),
    /// Classify the singularity type over [t0, t1].
    Classify(Inline),
    /// Embed the metric as a surface of revolution.
    Embed(Inline),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Rosenau,
    Sphere,
    Cigar,
    Flat,
    DsSoliton,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChartArg {
    Auto,
    Radial,
    Cylinder,
    LogPolar,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    SemiImplicit,
    ExplicitRk2,
}

#[derive(Args, Debug)]
struct Inline {
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Start from a saved grid instead of a family.
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    checkpoint: Option<PathBuf>,
    /// Cigar tip curvature.
    #[arg(long, default_value_t = 4.0)]
    r0: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<f64>,
    /// Output times, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    outputs: Vec<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    chart: ChartArg,
    /// Left end of a log-polar chart.
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, default_value_t = 0.4)]
    cfl: f64,
    #[arg(long, value_enum, default_value = "semi-implicit")]
    scheme: SchemeArg,
    /// Rescaling levels.
    #[arg(long, default_value_t = 6)]
    levels: u32,
    /// Threshold override, KEY=VALUE; repeatable.
    #[arg(long = "tol", value_parser = parse_tolerance)]
    tolerances: Vec<(String, f64)>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = "geomflow-out")]
    out: PathBuf,
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad value for {k}: {e}"))?;
    Ok((k.to_string(), v))
}

impl Inline {
    fn solution(&self, family: Family) -> ExactSolution {
        match family {
            Family::Rosenau => ExactSolution::Rosenau,
            Family::Sphere => ExactSolution::Sphere,
            Family::Cigar => ExactSolution::Cigar { r0: self.r0 },
            Family::Flat => ExactSolution::Flat,
            Family::DsSoliton => ExactSolution::DsSoliton { beta: self.beta, delta: self.delta, center: [0.0, 0.0] },
        }
    }

    fn into_config(self, task: Task) -> Result<ScenarioConfig> {
        let (initial, mut grid, mut times, label) = match (&self.family, &self.checkpoint) {
            (Some(f), _) => {
                let sol = self.solution(*f);
                let (grid, mut times) = family_defaults(&sol);
                if task == Task::Classify {
                    // classification needs several doublings of the window
                    times = TimeConfig { t0: -64.0, t1: -1.0, outputs: Vec::new() };
                }
                (Initial::Exact(sol), grid, times, sol.name().to_string())
            }
            (None, Some(path)) => {
                let g = geomflow_core::io::read_checkpoint(path)
                    .with_context(|| format!("cannot load checkpoint {}", path.display()))?;
                let chart = match g.chart() {
                    Chart::RadialPlane => ChartChoice::Radial,
                    Chart::Cylinder { .. } => ChartChoice::Cylinder,
                    Chart::LogPolar => ChartChoice::LogPolar,
                };
                let lo = (chart == ChartChoice::LogPolar).then(|| g.layout.lo());
                let grid = GridConfig { chart, extent: g.layout.hi(), n: g.layout.n, lo };
                let times = TimeConfig { t0: g.t, t1: g.t + 1.0, outputs: Vec::new() };
                (Initial::Checkpoint(path.clone()), grid, times, "checkpoint".to_string())
            }
            (None, None) => unreachable!("clap requires a source"),
        };
        if self.family.is_some() {
            grid.extent = self.extent.unwrap_or(grid.extent);
            grid.n = self.n.unwrap_or(grid.n);
            grid.chart = match self.chart {
                ChartArg::Auto => ChartChoice::Auto,
                ChartArg::Radial => ChartChoice::Radial,
                ChartArg::Cylinder => ChartChoice::Cylinder,
                ChartArg::LogPolar => ChartChoice::LogPolar,
            };
            grid.lo = self.lo;
        }
        times.t0 = self.t0.unwrap_or(times.t0);
        times.t1 = self.t1.unwrap_or(times.t1);
        times.outputs = self.outputs;
        let scheme = match self.scheme {
            SchemeArg::SemiImplicit => Scheme::SemiImplicit,
            SchemeArg::ExplicitRk2 => Scheme::ExplicitRK2,
        };
        let config = ScenarioConfig {
            name: self.name.unwrap_or_else(|| format!("{}-{label}", task.name())),
            initial,
            grid,
            times,
            cfl: self.cfl,
            scheme,
            tasks: vec![task],
            levels: self.levels,
            tolerances: self.tolerances.into_iter().collect::<BTreeMap<_, _>>(),
            out: self.out,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Errors that make the run exit with status 2.
struct InputError(anyhow::Error);

fn run_scenario(config: &ScenarioConfig) -> Result<bool, InputError> {
    let outcome = scenario::run(config).map_err(InputError)?;
    for check in &outcome.checks {
        println!("{}", check.summary_line());
    }
    println!("wrote {} files to {}", outcome.files.len(), config.out_dir().display());
    Ok(outcome.passed())
}

fn verify(out: &Path) -> Result<bool, InputError> {
    let dir = match std::env::var_os(OUT_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => out.to_path_buf(),
    };
    let results = scenario::verify_suite(&dir).map_err(InputError)?;
    for r in &results {
        println!("{}", r.summary_line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed; artifacts in {}", results.len() - failed, results.len(), dir.display());
    Ok(failed == 0)
}

fn dispatch(command: Command) -> Result<bool, InputError> {
    let inline = |args: Inline, task| args.into_config(task).map_err(InputError);
    match command {
        Command::Run { config } => run_scenario(&ScenarioConfig::load(&config).map_err(InputError)?),
        Command::Verify { out } => verify(&out),
        Command::Simulate(a) => run_scenario(&inline(a, Task::Simulate)?),
        Command::Invariants(a) => run_scenario(&inline(a, Task::Invariants)?),
        Command::Rescale(a) => run_scenario(&inline(a, Task::Rescale)?),
        Command::Classify(a) => run_scenario(&inline(a, Task::Classify)?),
        Command::Embed(a) => run_scenario(&inline(a, Task::Embed)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
