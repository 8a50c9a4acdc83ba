//! Executes the tasks of a scenario and judges them against its tolerances.
//!
//! Input problems (bad data, incompatible tasks, unwritable output) abort the
//! run with an error. Numerical failures inside a task are recorded as failed
//! checks so the remaining tasks still produce their files.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use geomflow_core::embedding::{circumference_and_width, embed, profile_from_metric};
use geomflow_core::exact::ExactSolution;
use geomflow_core::flow::{diagnostics, evolve, pde_residual, rmax_series, FlowTrajectory, SolverConfig, StopReason};
use geomflow_core::geometry::invariant_report;
use geomflow_core::grid::{rosenau_layout, sample_grid, Chart, ConformalGrid};
use geomflow_core::io::{self, CsvTable, JsonRecord};
use geomflow_core::rescaling::{
    backward_spacing, classify_type, default_gamma, default_window, dilate, dilated_profile, exact_window, pick_point,
    profile_distance, rosenau_backward_data, Verdict, BACKWARD_HALO,
};

use crate::config::{Initial, ScenarioConfig, Task};

/// Snapshots per exact window sampled for classification and sphere rescaling.
const WINDOW_SNAPSHOTS: usize = 1025;

/// Node spacing of the Rosenau cylinder used for classification.
const CLASSIFY_SPACING: f64 = 0.05;

/// Last time of the sphere windows; the sphere is singular at `t = 0`.
const SPHERE_END: f64 = -0.01;

/// Residual below which the discrete operator is exact on the family.
const EXACT_RESIDUAL: f64 = 1e-12;

/// Tip-normalized distance over which rescaled profiles are compared.
const PROFILE_EXTENT: f64 = 3.0;

pub const RESIDUAL_COLUMNS: [&str; 4] = ["n", "h", "residual", "ratio"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub task: Task,
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
    pub error: Option<String>,
}

impl Check {
    fn new(task: Task, name: &str, value: f64, limit: impl Into<String>, passed: bool) -> Self {
        Check { task, name: name.into(), value, limit: limit.into(), passed, error: None }
    }

    fn failed(task: Task, err: &anyhow::Error) -> Self {
        Check { task, name: "completed".into(), value: f64::NAN, limit: "no error".into(), passed: false, error: Some(format!("{err:#}")) }
    }

    fn record(&self) -> JsonRecord {
        let rec = JsonRecord::new()
            .text("task", self.task.name())
            .text("check", &self.name)
            .num("value", self.value)
            .text("limit", &self.limit)
            .boolean("passed", self.passed);
        match &self.error {
            Some(e) => rec.text("error", e),
            None => rec.raw("error", "null".into()),
        }
    }

    pub fn summary_line(&self) -> String {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!("[{mark}] {}/{}: {} (limit {})", self.task.name(), self.name, io::format_f64(self.value), self.limit);
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        line
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Failure to write an artifact; always an input error.
#[derive(Debug)]
pub struct OutputError(pub String);

impl std::fmt::Display for OutputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for OutputError {}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        io::write_atomic(&path, contents).map_err(|e| OutputError(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn checkpoint(&mut self, name: &str, grid: &ConformalGrid, traj: &FlowTrajectory) -> Result<()> {
        let path = self.dir.join(name);
        io::write_checkpoint(&path, grid, traj.scheme)
            .map_err(|e| OutputError(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }
}

/// Rejects task and data combinations that cannot run.
fn check_inputs(config: &ScenarioConfig, start: &ConformalGrid) -> Result<()> {
    let sol = config.exact();
    for task in &config.tasks {
        match (task, sol) {
            (Task::Verify, None) => bail!("verify needs an exact family, not a checkpoint"),
            (Task::Rescale | Task::Classify, Some(ExactSolution::Rosenau | ExactSolution::Sphere)) => {}
            // backward windows of the planar solitons shrink the tip below any fixed grid
            (Task::Rescale | Task::Classify, _) => {
                bail!("{} supports the ancient rosenau and sphere families", task.name())
            }
            (Task::Embed, _) if !start.chart().has_center() && start.chart() != Chart::LogPolar => {
                bail!("embed needs a radial or log-polar chart, got {}", start.chart().name())
            }
            _ => {}
        }
    }
    if sol.is_none() {
        let t0 = config.times.t0;
        ensure!(
            (start.t - t0).abs() <= 1e-12 * t0.abs().max(1.0),
            "times.t0 = {t0} differs from the checkpoint time {}",
            start.t
        );
        ensure!(config.times.t1 > start.t, "times.t1 must exceed the checkpoint time");
    }
    Ok(())
}

fn initial_grid(config: &ScenarioConfig) -> Result<ConformalGrid> {
    match &config.initial {
        Initial::Exact(sol) => Ok(sample_grid(sol, config.layout()?, config.times.t0)?),
        Initial::Checkpoint(path) => {
            io::read_checkpoint(path).with_context(|| format!("cannot load checkpoint {}", path.display()))
        }
    }
}

/// Runs every task of `config`, writing into its output directory.
pub fn run(config: &ScenarioConfig) -> Result<Outcome> {
    config.validate()?;
    let start = initial_grid(config)?;
    check_inputs(config, &start)?;
    let mut w = Writer { dir: config.out_dir(), files: Vec::new() };
    w.write("scenario.json", &config.to_json())?;

    let mut tasks = config.tasks.clone();
    tasks.sort();
    tasks.dedup();
    let mut checks = Vec::new();
    let mut trajectory: Option<FlowTrajectory> = None;
    for task in tasks {
        let result = match task {
            Task::Verify => verify(config, &mut w),
            Task::Simulate => simulate(config, &start, &mut w).map(|(c, t)| {
                trajectory = Some(t);
                c
            }),
            Task::Invariants => invariants(config, &start, trajectory.as_ref(), &mut w),
            Task::Rescale => rescale(config, &mut w),
            Task::Classify => classify(config, &mut w),
            Task::Embed => embedding(config, trajectory.as_ref().map_or(&start, |t| t.last()), &mut w),
        };
        match result {
            Ok(c) => checks.extend(c),
            // output failures are input errors, not measurements
            Err(e) if e.downcast_ref::<OutputError>().is_some() => return Err(e),
            Err(e) => checks.push(Check::failed(task, &e)),
        }
    }
    let records: Vec<JsonRecord> = checks.iter().map(Check::record).collect();
    w.write("checks.json", &io::render_array(&records))?;
    Ok(Outcome { checks, files: w.files })
}

fn verify(config: &ScenarioConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let sol = config.exact().expect("checked");
    let layout = config.layout()?;
    let mut table = CsvTable::new(&RESIDUAL_COLUMNS);
    let mut rows = Vec::new();
    for div in [8, 4, 2, 1] {
        let l = layout.with_nodes(layout.n / div)?;
        rows.push((l.n, l.h, pde_residual(&sol, l, config.times.t0)?));
    }
    let mut ratios = Vec::new();
    for (k, &(n, h, res)) in rows.iter().enumerate() {
        let ratio = k.checked_sub(1).map(|i| rows[i].2 / res);
        ratios.extend(ratio);
        table.push(&[Some(n as f64), Some(h), Some(res), ratio]);
    }
    w.write("residual_convergence.csv", &table.render())?;
    let (lo, hi) = (config.tolerance("order_min"), config.tolerance("order_max"));
    let finest = rows.last().expect("four rows").2;
    // the ratio farthest from the middle of the window
    let mid = 0.5 * (lo + hi);
    let worst = ratios.iter().copied().max_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs())).unwrap_or(f64::NAN);
    let ordered = ratios.iter().all(|r| (lo..=hi).contains(r));
    Ok(vec![
        Check::new(Task::Verify, "finest_residual", finest, "reported", true),
        Check::new(
            Task::Verify,
            "refinement_ratio",
            worst,
            format!("in [{lo}, {hi}] or residual < {EXACT_RESIDUAL:e}"),
            ordered || finest < EXACT_RESIDUAL,
        ),
    ])
}

fn solver_config(config: &ScenarioConfig) -> SolverConfig {
    SolverConfig { scheme: config.scheme, cfl: config.cfl, ..SolverConfig::default() }
}

fn simulate(config: &ScenarioConfig, start: &ConformalGrid, w: &mut Writer) -> Result<(Vec<Check>, FlowTrajectory)> {
    let traj = evolve(start, config.times.t1, &solver_config(config), &config.times.outputs)?;
    w.write("rmax_series.csv", &io::rmax_table(&rmax_series(&traj)).render())?;
    let mut checks = Vec::new();
    match diagnostics(&traj) {
        Ok(d) => w.write("diagnostics.json", &io::diagnostics_record(&d).render())?,
        Err(e) => checks.push(Check::failed(Task::Simulate, &anyhow::Error::from(e))),
    }
    for (k, t) in config.times.outputs.iter().enumerate() {
        if let Some(g) = traj.at_time(*t) {
            w.checkpoint(&format!("checkpoint_{k:03}.json"), g, &traj)?;
        }
    }
    w.checkpoint("checkpoint_final.json", traj.last(), &traj)?;

    let last = traj.last();
    let finished = !matches!(traj.stop, StopReason::StepLimit);
    checks.push(Check::new(Task::Simulate, "final_time", last.t, format!("{} or blow-up", config.times.t1), finished));
    if let Some(sol) = last.provenance {
        let exact = sample_grid(&sol, last.layout, last.t)?;
        let err = last
            .layout
            .reliable()
            .map(|i| ((last.u[i] - exact.u[i]) / exact.u[i]).abs())
            .fold(0.0, f64::max);
        let tol = config.tolerance("solution_relative");
        checks.push(Check::new(Task::Simulate, "sup_relative_error", err, format!("< {tol}"), err < tol));
    }
    Ok((checks, traj))
}

/// Invariants the family is known to have, in column order after `t`.
fn expected_invariants(sol: &ExactSolution) -> Option<[f64; 5]> {
    match *sol {
        ExactSolution::Flat => Some([0.0, TAU, f64::INFINITY, 1.0, 0.0]),
        ExactSolution::Cigar { r0 } => Some([TAU, 0.0, 2.0 * TAU / r0.sqrt(), 0.0, r0]),
        _ => None,
    }
}

fn invariants(
    config: &ScenarioConfig,
    start: &ConformalGrid,
    traj: Option<&FlowTrajectory>,
    w: &mut Writer,
) -> Result<Vec<Check>> {
    let mut times = vec![start.t];
    times.extend(config.times.outputs.iter().copied().filter(|&t| t > start.t && t < config.times.t1));
    times.push(config.times.t1);
    let grids: Vec<ConformalGrid> = match (traj, config.exact()) {
        (Some(traj), _) => times.iter().filter_map(|&t| traj.at_time(t).cloned()).collect(),
        (None, Some(sol)) => times.iter().map(|&t| sample_grid(&sol, start.layout, t)).collect::<Result<_, _>>()?,
        (None, None) => vec![start.clone()],
    };
    let reports = grids.iter().map(invariant_report).collect::<Result<Vec<_>, _>>()?;
    w.write("invariants.csv", &io::invariant_table(&reports).render())?;
    let records: Vec<JsonRecord> = reports.iter().map(io::invariant_record).collect();
    w.write("invariants.json", &io::render_array(&records))?;

    let Some(expected) = config.exact().as_ref().and_then(expected_invariants) else {
        return Ok(vec![Check::new(Task::Invariants, "rows", reports.len() as f64, "reported", true)]);
    };
    let tol = config.tolerance("invariant_relative");
    let names = ["tau", "aperture", "circumference", "avr", "r_max"];
    // zero targets are judged on the natural scale of the quantity
    let scales = [TAU, TAU, TAU, 1.0, 1.0];
    let mut checks = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let target = expected[k];
        let mut worst: f64 = 0.0;
        for r in &reports {
            let got = [Some(r.tau), r.aperture, r.circumference, r.avr, Some(r.r_max)][k].unwrap_or(f64::NAN);
            let dev = if target.is_infinite() {
                if got == target { 0.0 } else { f64::INFINITY }
            } else if target == 0.0 {
                got.abs() / scales[k]
            } else {
                (got / target - 1.0).abs()
            };
            worst = if dev.is_nan() { f64::NAN } else { worst.max(dev) };
        }
        checks.push(Check::new(Task::Invariants, &format!("{name}_deviation"), worst, format!("<= {tol}"), worst <= tol));
    }
    Ok(checks)
}

fn rescale(config: &ScenarioConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let sol = config.exact().expect("checked");
    let mut distances = Vec::new();
    let mut records = Vec::new();
    for j in 1..=config.levels {
        let tw = default_window(j);
        let traj = match sol {
            ExactSolution::Rosenau => rosenau_backward_data(tw, backward_spacing(j), None)?,
            _ => exact_window(&sol, config.layout()?, tw, SPHERE_END, WINDOW_SNAPSHOTS)?,
        };
        let pick = pick_point(&traj, tw, default_gamma(j), j)?;
        let profile = dilated_profile(&dilate(&traj, pick)?)?;
        let extent = profile.reach().min(PROFILE_EXTENT);
        let distance = profile_distance(&profile, extent)?;
        let (s, rn): (Vec<f64>, Vec<f64>) =
            profile.normalized_s().into_iter().zip(profile.rn.iter().copied()).take_while(|p| p.0 <= extent).unzip();
        let rec = io::pick_record(&pick, Some(distance)).num("profile_extent", extent).nums("profile_s", &s).nums("profile_rn", &rn);
        w.write(&format!("rescale_j{j}.json"), &rec.render())?;
        records.push(io::pick_record(&pick, Some(distance)));
        distances.push(distance);
    }
    w.write("rescale_picks.json", &io::render_array(&records))?;
    let last = *distances.last().expect("levels >= 1");
    if sol != ExactSolution::Rosenau {
        return Ok(vec![Check::new(Task::Rescale, "profile_distance", last, "reported", true)]);
    }
    let tol = config.tolerance("profile_distance");
    let monotone = distances.windows(2).all(|d| d[1] <= d[0]);
    Ok(vec![
        Check::new(Task::Rescale, "distances_nonincreasing", monotone as u8 as f64, "1", monotone),
        Check::new(Task::Rescale, "profile_distance", last, format!("< {tol}"), last < tol),
    ])
}

fn classify(config: &ScenarioConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let sol = config.exact().expect("checked");
    let (t0, t1) = (config.times.t0, config.times.t1);
    let layout = match sol {
        ExactSolution::Rosenau => {
            let half = t0.abs() + BACKWARD_HALO;
            rosenau_layout(half, (2.0 * half / CLASSIFY_SPACING).round() as usize + 1)?
        }
        _ => config.layout()?,
    };
    let traj = exact_window(&sol, layout, t0, t1, WINDOW_SNAPSHOTS)?;
    let report = classify_type(&traj, t1)?;
    w.write("type_series.csv", &io::type_table(&report).render())?;
    w.write("type_verdict.json", &io::type_record(&report).render())?;
    let verdict = serde_json::to_value(report.verdict)?.as_str().unwrap_or_default().to_string();
    let growth = report.growth.last().copied().unwrap_or(f64::NAN);
    let expected = if sol == ExactSolution::Rosenau { Verdict::Diverging } else { Verdict::Bounded };
    let name = serde_json::to_value(expected)?.as_str().unwrap_or_default().to_string();
    Ok(vec![Check::new(Task::Classify, &format!("verdict_{verdict}"), growth, name, expected == report.verdict)])
}

fn embedding(config: &ScenarioConfig, grid: &ConformalGrid, w: &mut Writer) -> Result<Vec<Check>> {
    let profile = profile_from_metric(grid)?;
    let surface = embed(&profile)?;
    let defect = surface.isometry_defect(&profile);
    w.write("surface.csv", &io::surface_table(&surface).render())?;
    let cw = circumference_and_width(&surface);
    let mut rec = JsonRecord::new().num("t", grid.t).num("isometry_defect", defect);
    if let Ok(cw) = &cw {
        rec = rec.raw("asymptotics", io::width_record(cw).render_indented(1));
    }
    w.write("embedding.json", &rec.render())?;
    let tol = config.tolerance("isometry");
    let mut checks = vec![Check::new(Task::Embed, "isometry_defect", defect, format!("< {tol}"), defect < tol)];
    if let Some(ExactSolution::Cigar { r0 }) = config.exact() {
        let expected = 2.0 * TAU / r0.sqrt();
        let tol = config.tolerance("circumference_relative");
        let dev = cw.map(|c| (c.circumference / expected - 1.0).abs()).unwrap_or(f64::NAN);
        checks.push(Check::new(Task::Embed, "circumference_deviation", dev, format!("<= {tol}"), dev <= tol));
    }
    Ok(checks)
}

/// Runs the built-in acceptance suite into `dir`.
pub fn verify_suite(dir: &Path) -> Result<Vec<geomflow_core::acceptance::CriterionResult>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(geomflow_core::acceptance::verify_all(dir)?)
}
