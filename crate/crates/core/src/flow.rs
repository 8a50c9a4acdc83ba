//! Time integration of `∂u/∂t = Δ log u` in the log variable `w = log u`,
//! where the equation reads `∂w/∂t = e^{-w} Δw`.
//!
//! The stored factor of a log-polar grid is `v = ρ² u`, which obeys
//! `∂v/∂t = ∂ₓₓ log v`, so every chart reduces to the same tridiagonal
//! operator. Truncated ends are pinned to the generating exact solution when
//! the grid knows it, and otherwise carry a Neumann condition on `w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::geometry;
use crate::grid::{Chart, ConformalGrid, GridLayout};

/// Curvature above which an evolution stops as a blow-up.
pub const DEFAULT_BLOWUP: f64 = 1e3;

/// Steps of the implicit scheme resolve this fraction of the curvature time
/// scale `1/max|R|`.
pub const CURVATURE_STEP_FRACTION: f64 = 0.25;

/// Fraction of the step taken by the trapezoidal stage.
const TRBDF2_GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

/// Newton stops once updates fall below this fraction of `max(1, max|log u|)`;
/// the attainable floor grows with the size of `log u`.
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Heun's method, stable for `dt ≲ h² u_min / 4`.
    #[serde(rename = "explicit_rk2")]
    ExplicitRK2,
    /// TR-BDF2: a trapezoidal stage followed by BDF2, each solved by Newton
    /// iteration on the tridiagonal Jacobian. Second order, L-stable and
    /// stiffly accurate, so the curvature in the far field (where
    /// `e^{-w}` is huge) keeps full order.
    SemiImplicit,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExplicitRK2 => "explicit_rk2",
            Scheme::SemiImplicit => "semi_implicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub cfl: f64,
    pub blowup: f64,
    /// Pin truncated ends to the grid's exact solution, when it has one.
    pub pin_boundary: bool,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::SemiImplicit,
            cfl: 0.4,
            blowup: DEFAULT_BLOWUP,
            pin_boundary: true,
            max_steps: 2_000_000,
        }
    }
}

impl SolverConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        SolverConfig { scheme, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Range { value: self.cfl, lo: 0.0, hi: 1.0 });
        }
        if !(self.blowup > 0.0) {
            return Err(Error::Range { value: self.blowup, lo: 0.0, hi: f64::INFINITY });
        }
        Ok(())
    }

    /// Step size for this scheme.
    pub fn dt_for(&self, grid: &ConformalGrid) -> f64 {
        match self.scheme {
            Scheme::ExplicitRK2 => adaptive_dt(grid, self.cfl),
            Scheme::SemiImplicit => self.cfl * grid.h().min(CURVATURE_STEP_FRACTION * self.rate_time(grid)),
        }
    }
}

impl SolverConfig {
    /// `1/max|∂ₜ log u|` under the discrete operator, which is `1/max|R|`
    /// away from the ends. Incompatible end data relaxes faster than that.
    fn rate_time(&self, grid: &ConformalGrid) -> f64 {
        let rate = operator_for(grid, self)
            .rhs(&grid.log_u(), grid.t)
            .map(|f| f.into_iter().fold(0.0, |m: f64, v| m.max(v.abs())))
            .unwrap_or(0.0);
        if rate > 0.0 {
            (1.0 / rate).min(curvature_time(grid))
        } else {
            curvature_time(grid)
        }
    }
}

/// `1/max|R|`, infinite on flat data. Negative curvature moves `log u` just
/// as fast, so it bounds the step too.
fn curvature_time(grid: &ConformalGrid) -> f64 {
    let r = geometry::scalar_curvature(grid).into_iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if r > 0.0 {
        1.0 / r
    } else {
        f64::INFINITY
    }
}

/// Explicit stability rule `cfl · min(h² u_min / 4, 1/max|R|)`.
pub fn adaptive_dt(grid: &ConformalGrid, cfl: f64) -> f64 {
    let h = grid.h();
    let u_min = grid.u.iter().copied().fold(f64::INFINITY, f64::min);
    cfl * (h * h * u_min / 4.0).min(curvature_time(grid))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    Axis,
    Pinned,
    Neumann(f64),
}

/// Tridiagonal discretization `L w = a w₋ + b w + c w₊ + f` with its end
/// conditions.
struct Operator {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    f: Vec<f64>,
    pinned: Vec<bool>,
    exact: Option<ExactSolution>,
    layout: GridLayout,
}

impl Operator {
    fn new(layout: GridLayout, exact: Option<ExactSolution>) -> Self {
        let n = layout.n;
        let h = layout.h;
        let h2 = h * h;
        let (left, right) = match (layout.chart, exact.is_some()) {
            (Chart::RadialPlane, true) => (End::Axis, End::Pinned),
            (Chart::RadialPlane, false) => (End::Axis, End::Neumann(0.0)),
            (_, true) => (End::Pinned, End::Pinned),
            // log v ≈ 2x + const near the puncture of a smooth metric
            (Chart::LogPolar, false) => (End::Neumann(2.0), End::Neumann(0.0)),
            (Chart::Cylinder { .. }, false) => (End::Neumann(0.0), End::Neumann(0.0)),
        };
        let radial = layout.chart == Chart::RadialPlane;
        let (mut a, mut b, mut c, mut f) = (vec![0.0; n], vec![-2.0 / h2; n], vec![0.0; n], vec![0.0; n]);
        for i in 1..n - 1 {
            let skew = if radial { h / (2.0 * layout.coord(i)) } else { 0.0 };
            a[i] = (1.0 - skew) / h2;
            c[i] = (1.0 + skew) / h2;
        }
        let mut pinned = vec![false; n];
        match left {
            End::Axis => {
                b[0] = -4.0 / h2;
                c[0] = 4.0 / h2;
            }
            End::Pinned => pinned[0] = true,
            End::Neumann(g) => {
                c[0] = 2.0 / h2;
                f[0] = -2.0 * g / h;
            }
        }
        match right {
            End::Pinned => pinned[n - 1] = true,
            End::Neumann(g) => {
                let skew = if radial { h / (2.0 * layout.coord(n - 1)) } else { 0.0 };
                a[n - 1] = 2.0 / h2;
                f[n - 1] = 2.0 * g * (1.0 + skew) / h;
            }
            End::Axis => unreachable!("axis only on the left"),
        }
        Operator { a, b, c, f, pinned, exact, layout }
    }

    fn apply(&self, w: &[f64], i: usize) -> f64 {
        let n = w.len();
        let mut s = self.b[i] * w[i] + self.f[i];
        if i > 0 {
            s += self.a[i] * w[i - 1];
        }
        if i + 1 < n {
            s += self.c[i] * w[i + 1];
        }
        s
    }

    fn exact_log(&self, i: usize, t: f64) -> Result<f64> {
        let sol = self.exact.expect("pinned rows need an exact solution");
        sol.eval_log_u(self.layout.chart.point(self.layout.coord(i))?, t)
    }

    /// Right-hand side `e^{-w} L w`; pinned rows follow `-R` of the exact solution.
    fn rhs(&self, w: &[f64], t: f64) -> Result<Vec<f64>> {
        (0..w.len())
            .map(|i| {
                if self.pinned[i] {
                    let sol = self.exact.expect("pinned rows need an exact solution");
                    Ok(-sol.eval_r(self.layout.chart.point(self.layout.coord(i))?, t)?)
                } else {
                    Ok((-w[i]).exp() * self.apply(w, i))
                }
            })
            .collect()
    }

    /// Solves `(I - k J) x = r` with `J` the Jacobian of `rhs` at `w`.
    fn solve_shifted(&self, w: &[f64], fw: &[f64], k: f64, r: &[f64]) -> Vec<f64> {
        let n = w.len();
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            if self.pinned[i] {
                continue;
            }
            let e = (-w[i]).exp();
            lower[i] = -k * e * self.a[i];
            diag[i] = 1.0 - k * (e * self.b[i] - fw[i]);
            upper[i] = -k * e * self.c[i];
        }
        thomas(&lower, &diag, &upper, r)
    }

    /// Solves `x - k F(x, t) = base` on free rows, with pinned rows set to
    /// the exact solution at `t`.
    fn solve_implicit(&self, guess: Vec<f64>, base: &[f64], k: f64, t: f64) -> Result<Vec<f64>> {
        let mut x = guess;
        for i in 0..x.len() {
            if self.pinned[i] {
                x[i] = self.exact_log(i, t)?;
            }
        }
        let mut worst = 0;
        for _ in 0..NEWTON_MAX_ITER {
            let fx = self.rhs(&x, t)?;
            let r: Vec<f64> = (0..x.len())
                .map(|i| if self.pinned[i] { 0.0 } else { base[i] + k * fx[i] - x[i] })
                .collect();
            let delta = self.solve_shifted(&x, &fx, k, &r);
            let (mut size, mut scale): (f64, f64) = (0.0, 1.0);
            for (i, (xi, d)) in x.iter_mut().zip(&delta).enumerate() {
                *xi += d;
                if !(d.abs() <= size) {
                    size = d.abs();
                    worst = i;
                }
                scale = scale.max(xi.abs());
            }
            if !size.is_finite() {
                break;
            }
            if size <= NEWTON_TOL * scale {
                return Ok(x);
            }
        }
        let node = x.iter().position(|v| !v.is_finite()).unwrap_or(worst);
        Err(Error::StepRejected { node, t })
    }
}

/// Tridiagonal solve; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = upper[0] / diag[0];
    dp[0] = r[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * cp[i - 1];
        cp[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        dp[i] = (r[i] - lower[i] * dp[i - 1]) / m;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    /// Largest `|Δu/dt - ½(Δ log u_old + Δ log u_new)|` over reliable free nodes.
    pub max_residual: f64,
    pub r_max: f64,
}

fn operator_for(grid: &ConformalGrid, config: &SolverConfig) -> Operator {
    let exact = if config.pin_boundary { grid.provenance } else { None };
    Operator::new(grid.layout, exact)
}

/// One step of the configured scheme.
pub fn step(grid: &ConformalGrid, dt: f64, config: &SolverConfig) -> Result<(ConformalGrid, StepRecord)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Range { value: dt, lo: 0.0, hi: f64::INFINITY });
    }
    step_with(&operator_for(grid, config), grid, dt, config.scheme)
}

fn step_with(op: &Operator, grid: &ConformalGrid, dt: f64, scheme: Scheme) -> Result<(ConformalGrid, StepRecord)> {
    let t = grid.t;
    let t_new = t + dt;
    let w = grid.log_u();
    let f0 = op.rhs(&w, t)?;
    let mut w_new: Vec<f64> = match scheme {
        Scheme::ExplicitRK2 => {
            let w1: Vec<f64> = w.iter().zip(&f0).map(|(w, f)| w + dt * f).collect();
            let f1 = op.rhs(&w1, t_new)?;
            (0..w.len()).map(|i| w[i] + 0.5 * dt * (f0[i] + f1[i])).collect()
        }
        Scheme::SemiImplicit => {
            let g = TRBDF2_GAMMA;
            let half = 0.5 * g * dt;
            let base: Vec<f64> = w.iter().zip(&f0).map(|(w, f)| w + half * f).collect();
            let wg = op.solve_implicit(w.clone(), &base, half, t + g * dt)?;
            let (c_mid, c_old) = (1.0 / (g * (2.0 - g)), (1.0 - g).powi(2) / (g * (2.0 - g)));
            let base: Vec<f64> = (0..w.len()).map(|i| c_mid * wg[i] - c_old * w[i]).collect();
            let guess = (0..w.len()).map(|i| wg[i] + (wg[i] - w[i]) * (1.0 - g) / g).collect();
            op.solve_implicit(guess, &base, (1.0 - g) / (2.0 - g) * dt, t_new)?
        }
    };
    for i in 0..w_new.len() {
        if op.pinned[i] {
            w_new[i] = op.exact_log(i, t_new)?;
        }
    }
    let u: Vec<f64> = w_new.iter().map(|v| v.exp()).collect();
    if let Some(node) = u.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::StepRejected { node, t });
    }
    let next = ConformalGrid::new(grid.layout, u, t_new, grid.provenance)?;
    let mut max_residual: f64 = 0.0;
    for i in grid.layout.reliable() {
        if op.pinned[i] {
            continue;
        }
        let lap = 0.5 * (op.apply(&w, i) + op.apply(&w_new, i));
        max_residual = max_residual.max(((next.u[i] - grid.u[i]) / dt - lap).abs());
    }
    let r_max = geometry::max_curvature(&next);
    Ok((next, StepRecord { t: t_new, dt, max_residual, r_max }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BlowUp { t: f64, r_max: f64 },
    StepLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub snapshots: Vec<ConformalGrid>,
    pub steps: Vec<StepRecord>,
    /// `None` for trajectories sampled from an exact solution.
    pub scheme: Option<Scheme>,
    pub stop: StopReason,
}

/// Evolves `grid` to `t_end`, landing exactly on every requested output
/// time. Every accepted step is kept as a snapshot.
pub fn evolve(grid: &ConformalGrid, t_end: f64, config: &SolverConfig, outputs: &[f64]) -> Result<FlowTrajectory> {
    config.validate()?;
    if !(t_end > grid.t) {
        return Err(Error::Range { value: t_end, lo: grid.t, hi: f64::INFINITY });
    }
    let op = operator_for(grid, config);
    let mut stops: Vec<f64> = outputs.iter().copied().filter(|&t| t > grid.t && t < t_end).collect();
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let mut snapshots = vec![grid.clone()];
    let mut steps = Vec::new();
    let mut current = grid.clone();
    let mut next_stop = 0;
    let mut stop = StopReason::Completed;
    while next_stop < stops.len() {
        if steps.len() >= config.max_steps {
            stop = StopReason::StepLimit;
            break;
        }
        let target = stops[next_stop];
        let mut dt = config.dt_for(&current);
        // avoid a sliver step just before a stop
        if current.t + 1.5 * dt >= target {
            dt = if current.t + dt >= target { target - current.t } else { 0.5 * (target - current.t) };
        }
        let (mut next, record) = step_with(&op, &current, dt, config.scheme)?;
        if (next.t - target).abs() <= 1e-12 * target.abs().max(1.0) {
            next.t = target;
            next_stop += 1;
        }
        let blown = record.r_max > config.blowup;
        steps.push(StepRecord { t: next.t, ..record });
        snapshots.push(next.clone());
        current = next;
        if blown {
            stop = StopReason::BlowUp { t: current.t, r_max: record.r_max };
            break;
        }
    }
    Ok(FlowTrajectory { snapshots, steps, scheme: Some(config.scheme), stop })
}

impl FlowTrajectory {
    /// Trajectory of exact snapshots at the given increasing times; sampling
    /// stops early once the curvature exceeds `blowup`.
    pub fn exact(sol: &ExactSolution, layout: GridLayout, times: &[f64], blowup: f64) -> Result<Self> {
        let mut snapshots: Vec<ConformalGrid> = Vec::with_capacity(times.len());
        let mut steps = Vec::new();
        let mut stop = StopReason::Completed;
        for &t in times {
            let g = crate::grid::sample_grid(sol, layout, t)?;
            let r_max = geometry::max_curvature(&g);
            if let Some(prev) = snapshots.last() {
                steps.push(StepRecord { t, dt: t - prev.t, max_residual: 0.0, r_max });
            }
            snapshots.push(g);
            if r_max > blowup {
                stop = StopReason::BlowUp { t, r_max };
                break;
            }
        }
        let traj = FlowTrajectory { snapshots, steps, scheme: None, stop };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.snapshots.first().ok_or_else(|| Error::InvalidGrid("empty trajectory".into()))?;
        for w in self.snapshots.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::InvalidGrid(format!("snapshot times not increasing at t = {}", w[1].t)));
            }
            if w[1].layout != first.layout {
                return Err(Error::InvalidGrid("snapshots do not share a layout".into()));
            }
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|g| g.t).collect()
    }

    pub fn first(&self) -> &ConformalGrid {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &ConformalGrid {
        self.snapshots.last().expect("nonempty trajectory")
    }

    pub fn layout(&self) -> GridLayout {
        self.first().layout
    }

    /// Snapshot whose time equals `t` up to roundoff.
    pub fn at_time(&self, t: f64) -> Option<&ConformalGrid> {
        self.snapshots.iter().find(|g| (g.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// Parabolic rescaling `λ g(t/λ)`: factors times `λ`, times times `λ`.
    pub fn parabolic_rescale(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Range { value: lambda, lo: 0.0, hi: f64::INFINITY });
        }
        let snapshots = self
            .snapshots
            .iter()
            .map(|g| {
                let mut s = g.scaled(lambda)?;
                s.t = g.t * lambda;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let steps = self
            .steps
            .iter()
            .map(|s| StepRecord {
                t: s.t * lambda,
                dt: s.dt * lambda,
                max_residual: s.max_residual,
                r_max: s.r_max / lambda,
            })
            .collect();
        let stop = match self.stop {
            StopReason::BlowUp { t, r_max } => StopReason::BlowUp { t: t * lambda, r_max: r_max / lambda },
            other => other,
        };
        Ok(FlowTrajectory { snapshots, steps, scheme: self.scheme, stop })
    }
}

/// Sup over reliable nodes of `|∂u/∂t - Δ_h log u|` for exact data, using
/// the analytic time derivative.
pub fn pde_residual(sol: &ExactSolution, layout: GridLayout, t: f64) -> Result<f64> {
    let g = crate::grid::sample_grid(sol, layout, t)?;
    let lap = geometry::laplacian(&layout, &g.log_u());
    let mut worst: f64 = 0.0;
    for i in layout.reliable() {
        let ut = sol.eval_du_dt(layout.chart.point(layout.coord(i))?, t)?;
        worst = worst.max((ut - lap[i]).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    /// `max |log(u(t)/u(t₀)) + ∫ R dτ|` over reliable nodes and snapshots.
    pub f_defect: f64,
    /// `(t, inf_x F(x, t))` per snapshot.
    pub m_of_t: Vec<(f64, f64)>,
    /// Largest decrease of `(t - origin)·R(x, t)` between consecutive snapshots.
    pub harnack_defect: f64,
    /// Time origin of the `t·R` check; nonzero when the trajectory was shifted
    /// to positive times.
    pub harnack_origin: f64,
    /// `max |dℓ/dt + (R/2) ℓ| / max(|(R/2) ℓ|)` over tracked coordinate circles.
    pub length_evolution_defect: f64,
}

/// Consistency diagnostics of a trajectory with at least three snapshots.
pub fn diagnostics(traj: &FlowTrajectory) -> Result<DiagnosticReport> {
    traj.validate()?;
    let k = traj.snapshots.len();
    if k < 3 {
        return Err(Error::InsufficientWindow(format!("diagnostics need 3 snapshots, got {k}")));
    }
    let layout = traj.layout();
    let mut nodes: Vec<usize> = geometry::resolved_nodes(traj.first());
    for g in &traj.snapshots[1..] {
        let keep = geometry::resolved_nodes(g);
        nodes.retain(|i| keep.binary_search(i).is_ok());
    }
    let curv: Vec<Vec<f64>> = traj.snapshots.iter().map(geometry::scalar_curvature).collect();
    let times = traj.times();
    let log0 = traj.first().log_u();

    let mut f_defect: f64 = 0.0;
    let mut m_of_t = Vec::with_capacity(k);
    let mut integral = vec![0.0; layout.n];
    for s in 0..k {
        if s > 0 {
            let dt = times[s] - times[s - 1];
            for &i in &nodes {
                integral[i] += 0.5 * dt * (curv[s][i] + curv[s - 1][i]);
            }
        }
        let g = &traj.snapshots[s];
        let mut inf = f64::INFINITY;
        for &i in &nodes {
            let f = g.u[i].ln() - log0[i];
            inf = inf.min(f);
            f_defect = f_defect.max((f + integral[i]).abs());
        }
        m_of_t.push((times[s], inf));
    }

    let harnack_origin = if times[0] > 0.0 { 0.0 } else { times[0] - 1.0 };
    let mut harnack_defect: f64 = 0.0;
    for s in 1..k {
        let (ta, tb) = (times[s - 1] - harnack_origin, times[s] - harnack_origin);
        for &i in &nodes {
            harnack_defect = harnack_defect.max(ta * curv[s - 1][i] - tb * curv[s][i]);
        }
    }

    let length = |g: &ConformalGrid, i: usize| match layout.chart {
        Chart::RadialPlane => layout.coord(i) * g.u[i].sqrt(),
        _ => g.u[i].sqrt(),
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for s in 1..k - 1 {
        let (t0, t1, t2) = (times[s - 1], times[s], times[s + 1]);
        let (h1, h2) = (t1 - t0, t2 - t1);
        let (w0, w1, w2) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        for &i in &nodes {
            let ell = |g: &ConformalGrid| length(g, i);
            let rate = w0 * ell(&traj.snapshots[s - 1]) + w1 * ell(&traj.snapshots[s]) + w2 * ell(&traj.snapshots[s + 1]);
            let predicted = -0.5 * curv[s][i] * ell(&traj.snapshots[s]);
            worst = worst.max((rate - predicted).abs());
            scale = scale.max(predicted.abs());
        }
    }
    let length_evolution_defect = if scale > 0.0 { worst / scale } else { worst };

    Ok(DiagnosticReport { f_defect, m_of_t, harnack_defect, harnack_origin, length_evolution_defect })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaxSeries {
    pub points: Vec<(f64, f64)>,
    /// Largest decrease of `R_max` per unit time between snapshots.
    pub monotonicity_defect: f64,
}

pub fn rmax_series(traj: &FlowTrajectory) -> RmaxSeries {
    let points: Vec<(f64, f64)> = traj.snapshots.iter().map(|g| (g.t, geometry::max_curvature(g))).collect();
    let monotonicity_defect = points
        .windows(2)
        .map(|w| ((w[0].1 - w[1].1) / (w[1].0 - w[0].0)).max(0.0))
        .fold(0.0, f64::max);
    RmaxSeries { points, monotonicity_defect }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rosenau_layout, sample_grid};

    #[test]
    fn thomas_solves_tridiagonal_systems() {
        let lower = [0.0, 1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let r: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i] + if i > 0 { lower[i] * x[i - 1] } else { 0.0 } + if i < 3 { upper[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let y = thomas(&lower, &diag, &upper, &r);
        for i in 0..4 {
            assert!((x[i] - y[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_is_stationary_under_both_schemes() {
        let g = sample_grid(&ExactSolution::Flat, GridLayout::radial(10.0, 64).unwrap(), 0.0).unwrap();
        for scheme in [Scheme::ExplicitRK2, Scheme::SemiImplicit] {
            let (next, rec) = step(&g, 0.01, &SolverConfig::with_scheme(scheme)).unwrap();
            assert_eq!(next.u, g.u);
            assert_eq!(rec.max_residual, 0.0);
        }
    }

    #[test]
    fn flat_dt_rule() {
        let g = sample_grid(&ExactSolution::Flat, GridLayout::radial(10.0, 101).unwrap(), 0.0).unwrap();
        assert!((adaptive_dt(&g, 0.5) - 0.5 * 0.01 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rosenau_single_step_error() {
        for (scheme, layout, dt) in [
            (Scheme::SemiImplicit, rosenau_layout(20.0, 2001).unwrap(), 1e-4),
            (Scheme::ExplicitRK2, rosenau_layout(5.0, 201).unwrap(), 1e-5),
        ] {
            let g = sample_grid(&ExactSolution::Rosenau, layout, -2.0).unwrap();
            let exact = sample_grid(&ExactSolution::Rosenau, layout, -2.0 + dt).unwrap();
            let (next, _) = step(&g, dt, &SolverConfig::with_scheme(scheme)).unwrap();
            let err = next.u.iter().zip(&exact.u).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-7, "{scheme:?}: {err}");
        }
    }

    #[test]
    fn unpinned_ends_stay_positive() {
        let layout = GridLayout::radial(10.0, 200).unwrap();
        let g = ConformalGrid::from_fn(layout, 0.0, |r| 1.0 + (-r * r).exp()).unwrap();
        let config = SolverConfig { pin_boundary: false, ..Default::default() };
        let traj = evolve(&g, 1.0, &config, &[0.5]).unwrap();
        assert!(traj.at_time(0.5).is_some());
        assert_eq!(traj.last().t, 1.0);
        assert!(traj.snapshots.iter().all(|s| s.u.iter().all(|&v| v > 0.0)));
    }

    #[test]
    fn sphere_blows_up_cleanly() {
        let g = sample_grid(&ExactSolution::Sphere, GridLayout::radial(4.0, 200).unwrap(), -1.0).unwrap();
        let traj = evolve(&g, -1e-6, &SolverConfig::default(), &[]).unwrap();
        assert!(matches!(traj.stop, StopReason::BlowUp { .. }));
        for (t, r) in rmax_series(&traj).points {
            let ratio = -t * r;
            assert!((0.9..=1.1).contains(&ratio), "t = {t}: {ratio}");
        }
    }
}
