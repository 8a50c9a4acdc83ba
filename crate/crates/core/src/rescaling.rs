//! Point picking and parabolic dilation of ancient solutions, comparison of
//! dilated curvature profiles with the cigar, and a finite-window Type I/II
//! classifier.
//!
//! Curvature magnitudes use `M = R/2`, the Gauss curvature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::flow::{self, FlowTrajectory, SolverConfig, StopReason};
use crate::geometry;
use crate::grid::{Chart, ConformalGrid, GridLayout};

/// A window `[T, 0]` counts as covered when the last snapshot lies within
/// `|T|` times this fraction of `t = 0`.
pub const COVERAGE_FRACTION: f64 = 1.0 / 64.0;

/// Growth per time doubling that marks the functional as diverging.
pub const DIVERGENCE_GROWTH: f64 = 1.5;

/// Fewest dyadic windows the classifier accepts.
pub const MIN_WINDOWS: usize = 4;

pub const VERDICT_LABEL: &str = "finite-window heuristic";

/// Default window start `T_j = -2^j`.
pub fn default_window(j: u32) -> f64 {
    -(2f64.powi(j as i32))
}

/// Default pick tolerance `γ_j = 1 - 1/(j+1)`.
pub fn default_gamma(j: u32) -> f64 {
    1.0 - 1.0 / (j as f64 + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescalingPick {
    pub j: u32,
    pub t_window: f64,
    pub gamma: f64,
    pub t_j: f64,
    /// Chart coordinate of the picked node.
    pub x_j: f64,
    pub node: usize,
    pub snapshot: usize,
    pub m_j: f64,
    pub alpha: f64,
    pub omega: f64,
    /// `|t_j|(t_j - T) M_j`.
    pub functional: f64,
    /// Searched supremum of `|t|(t - T) M` over the window.
    pub supremum: f64,
}

fn check_window(traj: &FlowTrajectory, t_window: f64) -> Result<()> {
    traj.validate()?;
    let first = traj.first().t;
    let last = traj.last().t;
    let reaches_end = last >= COVERAGE_FRACTION * t_window || matches!(traj.stop, StopReason::BlowUp { .. });
    if !(t_window < 0.0) || first > t_window || !reaches_end {
        return Err(Error::WindowNotCovered { lo: t_window, hi: 0.0 });
    }
    Ok(())
}

/// Exhaustive search of `|t|(t - T) M(x, t)` over resolved nodes and the
/// snapshots in `[T, 0]`. Ties keep the earliest time, then the smallest node.
pub fn pick_point(traj: &FlowTrajectory, t_window: f64, gamma: f64, j: u32) -> Result<RescalingPick> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Range { value: gamma, lo: 0.0, hi: 1.0 });
    }
    check_window(traj, t_window)?;
    let mut best: Option<(f64, usize, usize, f64)> = None;
    for (k, g) in traj.snapshots.iter().enumerate() {
        if g.t < t_window || g.t > 0.0 {
            continue;
        }
        let r = geometry::scalar_curvature(g);
        let weight = g.t.abs() * (g.t - t_window);
        for i in geometry::resolved_nodes(g) {
            let m = 0.5 * r[i];
            let value = weight * m;
            if best.map_or(true, |(b, ..)| value > b) {
                best = Some((value, k, i, m));
            }
        }
    }
    let (supremum, snapshot, node, m_j) = best.ok_or(Error::DegeneratePick)?;
    if !(supremum > 0.0) || !(m_j > 0.0) {
        return Err(Error::DegeneratePick);
    }
    let g = &traj.snapshots[snapshot];
    let t_j = g.t;
    Ok(RescalingPick {
        j,
        t_window,
        gamma,
        t_j,
        x_j: g.layout.coord(node),
        node,
        snapshot,
        m_j,
        alpha: (t_j - t_window) * m_j,
        omega: -t_j * m_j,
        functional: supremum,
        supremum,
    })
}

/// `u_j(x, t) = M_j u(x, t_j + t/M_j)` by linear interpolation in time
/// between snapshots.
pub struct DilatedSolution<'a> {
    traj: &'a FlowTrajectory,
    pick: RescalingPick,
}

pub fn dilate(traj: &FlowTrajectory, pick: RescalingPick) -> Result<DilatedSolution<'_>> {
    if !(pick.m_j > 0.0) {
        return Err(Error::DegeneratePick);
    }
    Ok(DilatedSolution { traj, pick })
}

impl DilatedSolution<'_> {
    pub fn pick(&self) -> &RescalingPick {
        &self.pick
    }

    pub fn original_time(&self, t: f64) -> f64 {
        self.pick.t_j + t / self.pick.m_j
    }

    pub fn eval(&self, t: f64) -> Result<ConformalGrid> {
        let p = &self.pick;
        if !(t > -p.alpha && t < p.omega) && t != 0.0 {
            return Err(Error::Range { value: t, lo: -p.alpha, hi: p.omega });
        }
        let s = self.original_time(t);
        let times = self.traj.times();
        let k = times.partition_point(|&v| v <= s);
        let grid = if k > 0 && times[k - 1] == s {
            self.traj.snapshots[k - 1].clone()
        } else if k == 0 || k == times.len() {
            return Err(Error::WindowNotCovered { lo: s, hi: s });
        } else {
            let (a, b) = (&self.traj.snapshots[k - 1], &self.traj.snapshots[k]);
            let w = (s - a.t) / (b.t - a.t);
            let u = a.u.iter().zip(&b.u).map(|(x, y)| x + w * (y - x)).collect();
            ConformalGrid::new(a.layout, u, s, None)?
        };
        let mut out = grid.scaled(p.m_j)?;
        out.t = t;
        Ok(out)
    }

    /// Largest excess of `R_j/2` over `α ω / (γ (α + t)(ω - t))` at the
    /// snapshot times inside the dilated interval, relative to the bound.
    pub fn curvature_bound_defect(&self) -> Result<f64> {
        let p = self.pick;
        let mut worst: f64 = 0.0;
        for g in &self.traj.snapshots {
            let t = (g.t - p.t_j) * p.m_j;
            if !(t > -p.alpha && t < p.omega) {
                continue;
            }
            let bound = p.alpha * p.omega / (p.gamma * (p.alpha + t) * (p.omega - t));
            let r = geometry::scalar_curvature(g);
            for i in geometry::resolved_nodes(g) {
                let mj = 0.5 * r[i] / p.m_j;
                worst = worst.max((mj - bound) / bound);
            }
        }
        Ok(worst)
    }
}

/// Tip-normalized cigar curvature `sech²(s/2)` at intrinsic distance `s`
/// from the tip, for the metric scaled to tip curvature 1.
pub fn cigar_profile(s: f64) -> f64 {
    let c = (0.5 * s).cosh();
    1.0 / (c * c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledProfile {
    /// Geodesic distance from the picked node.
    pub s: Vec<f64>,
    /// `R(s)/r0`.
    pub rn: Vec<f64>,
    /// Curvature at the profile's origin (the pole, when measured from it).
    pub r0: f64,
    /// Distance from the pole to the picked node (zero unless the pick
    /// stands in for a pole beyond the resolved region).
    pub offset: f64,
}

/// Distance from `node` to the chart end on its outer side, closing the
/// last cell with the exponential tail `√u ∝ e^{-κx/2}`.
fn pole_distance(sqrt_u: &[f64], h: f64, node: usize, toward_start: bool) -> f64 {
    let n = sqrt_u.len();
    let (range, end, inner): (Vec<usize>, usize, usize) =
        if toward_start { ((0..=node).collect(), 0, 1) } else { ((node..n).collect(), n - 1, n - 2) };
    let body: f64 = range.windows(2).map(|w| 0.5 * h * (sqrt_u[w[0]] + sqrt_u[w[1]])).sum();
    // decay rate of log √u toward the end
    let rate = (sqrt_u[inner] / sqrt_u[end]).ln() / h;
    let tail = if rate > 0.0 { sqrt_u[end] / rate } else { 0.0 };
    body + tail
}

impl RescaledProfile {
    /// Profile along the chart coordinate from `node`, walking through
    /// resolved nodes toward the side with more nodes.
    ///
    /// On a cylinder, a node within [`POLE_SNAP`] (tip-normalized) of the
    /// chart end stands in for the pole, so distances are measured from it.
    pub fn from_grid(grid: &ConformalGrid, node: usize) -> Result<Self> {
        let resolved = geometry::resolved_nodes(grid);
        Self::from_grid_with(grid, node, &resolved)
    }

    /// As [`RescaledProfile::from_grid`] with the resolved node set given
    /// explicitly (for dilated grids, the set of the undilated snapshot).
    pub fn from_grid_with(grid: &ConformalGrid, node: usize, resolved: &[usize]) -> Result<Self> {
        let n = grid.len();
        if node >= n {
            return Err(Error::OutOfExtent { value: node as f64, lo: 0.0, hi: (n - 1) as f64 });
        }
        let r = geometry::scalar_curvature(grid);
        let r0 = r[node];
        if !(r0 > 0.0) {
            return Err(Error::DegeneratePick);
        }
        let (first, last) = match (resolved.first(), resolved.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0, n - 1),
        };
        let rightward = node < n - 1 - node;
        let path: Vec<usize> =
            if rightward { (node..=last.max(node)).collect() } else { (first.min(node)..=node).rev().collect() };
        let h = grid.h();
        let sqrt_u: Vec<f64> = grid.u.iter().map(|v| v.sqrt()).collect();
        let offset = match grid.chart() {
            Chart::Cylinder { .. } => {
                let d = pole_distance(&sqrt_u, h, node, rightward);
                if d * r0.sqrt() <= POLE_SNAP {
                    d
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        // near a smooth pole R is linear in u; extrapolate to u = 0
        let r0 = if offset > 0.0 {
            match path.iter().find(|&&i| grid.u[i] >= 4.0 * grid.u[node]) {
                Some(&b) => r0 + (r0 - r[b]) * grid.u[node] / (grid.u[b] - grid.u[node]),
                None => r0,
            }
        } else {
            r0
        };
        let mut s = Vec::with_capacity(path.len());
        let mut acc = offset;
        s.push(acc);
        for w in path.windows(2) {
            acc += 0.5 * h * (sqrt_u[w[0]] + sqrt_u[w[1]]);
            s.push(acc);
        }
        let rn = path.iter().map(|&i| r[i] / r0).collect();
        Ok(RescaledProfile { s, rn, r0, offset })
    }

    /// Largest tip-normalized distance covered by the profile.
    pub fn reach(&self) -> f64 {
        self.s.last().expect("nonempty profile") * self.r0.sqrt()
    }

    /// Distances rescaled to tip curvature 1.
    pub fn normalized_s(&self) -> Vec<f64> {
        let k = self.r0.sqrt();
        self.s.iter().map(|s| s * k).collect()
    }
}

/// `max |Rn(s) - sech²(s/2)|` over tip-normalized `s ∈ [0, S]`.
pub fn profile_distance(profile: &RescaledProfile, extent: f64) -> Result<f64> {
    let s = profile.normalized_s();
    let reach = profile.reach();
    if !(extent > 0.0) || extent > reach {
        return Err(Error::OutOfExtent { value: extent, lo: 0.0, hi: reach });
    }
    Ok(s.iter()
        .zip(&profile.rn)
        .take_while(|(s, _)| **s <= extent)
        .map(|(s, rn)| (rn - cigar_profile(*s)).abs())
        .fold(0.0, f64::max))
}

/// Profile of the dilated solution at `t = 0` seen from the picked node.
pub fn dilated_profile(dilated: &DilatedSolution) -> Result<RescaledProfile> {
    let resolved = geometry::resolved_nodes(&dilated.traj.snapshots[dilated.pick.snapshot]);
    RescaledProfile::from_grid_with(&dilated.eval(0.0)?, dilated.pick.node, &resolved)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `|t| M` stays bounded (Type I signature).
    Bounded,
    /// `|t| M` keeps growing with the window (Type II signature).
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeReport {
    /// `(T, S(T))` for `T = -2, -4, ...`.
    pub samples: Vec<(f64, f64)>,
    /// `S(2T)/S(T)` per doubling.
    pub growth: Vec<f64>,
    pub verdict: Verdict,
    pub label: String,
}

/// `S(T) = max |t| M(x, t)` over resolved nodes and snapshots in `[T, t0]`.
pub fn functional_sample(traj: &FlowTrajectory, t_window: f64, t0: f64) -> Result<f64> {
    let tol = 1e-12 * t_window.abs();
    if traj.first().t > t_window + tol || t0 > traj.last().t + tol || !(t_window < t0) {
        return Err(Error::WindowNotCovered { lo: t_window, hi: t0 });
    }
    let mut best: f64 = 0.0;
    for g in &traj.snapshots {
        if g.t < t_window - tol || g.t > t0 + tol {
            continue;
        }
        best = best.max(g.t.abs() * 0.5 * geometry::max_curvature(g));
    }
    Ok(best)
}

/// Dyadic windows `T = -2, -4, ...` down to the start of the trajectory.
pub fn classify_type(traj: &FlowTrajectory, t0: f64) -> Result<TypeReport> {
    traj.validate()?;
    let first = traj.first().t;
    let mut samples = Vec::new();
    let mut t_window = -2.0;
    while t_window >= first * (1.0 + 1e-12) {
        if t_window < t0 {
            samples.push((t_window, functional_sample(traj, t_window, t0)?));
        }
        t_window *= 2.0;
    }
    if samples.len() < MIN_WINDOWS {
        return Err(Error::InsufficientWindow(format!(
            "classifier needs {MIN_WINDOWS} dyadic windows before t0 = {t0}, trajectory starts at {first}"
        )));
    }
    let growth: Vec<f64> = samples
        .windows(2)
        .map(|w| match (w[0].1, w[1].1) {
            (a, b) if a > 0.0 => b / a,
            (_, b) if b > 0.0 => f64::INFINITY,
            _ => 1.0,
        })
        .collect();
    let diverging = growth.len() >= 3 && growth[growth.len() - 3..].iter().all(|&g| g >= DIVERGENCE_GROWTH);
    Ok(TypeReport {
        samples,
        growth,
        verdict: if diverging { Verdict::Diverging } else { Verdict::Bounded },
        label: VERDICT_LABEL.to_string(),
    })
}

/// Tip-normalized distance from a chart end within which a picked node is
/// taken to represent the pole.
pub const POLE_SNAP: f64 = 0.05;

/// Extra half width beyond `|T|` so the poles' caps fit on the grid.
pub const BACKWARD_HALO: f64 = 24.0;

/// Time intervals per backward window of exact data.
pub const BACKWARD_SNAPSHOTS: usize = 256;

/// Grid spacing for the `j`-th backward window, refined with `j` so the
/// discretization floor of the profile distance keeps shrinking.
pub fn backward_spacing(j: u32) -> f64 {
    0.1 * 2f64.powf(-0.5 * j as f64)
}

/// Rosenau data on `[T, T/64]` over a cylinder of half width `|T| + halo`,
/// from the solver or sampled from the exact formula. Stopping short of the
/// singular time keeps the window inside the solver's accurate range.
pub fn rosenau_backward_data(t_window: f64, spacing: f64, solver: Option<&SolverConfig>) -> Result<FlowTrajectory> {
    if !(t_window < 0.0) {
        return Err(Error::Range { value: t_window, lo: f64::NEG_INFINITY, hi: 0.0 });
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidGrid(format!("spacing must be > 0, got {spacing}")));
    }
    let half = t_window.abs() + BACKWARD_HALO;
    let n = (2.0 * half / spacing).round() as usize + 1;
    let layout = crate::grid::rosenau_layout(half, n)?;
    let t_end = COVERAGE_FRACTION * t_window;
    match solver {
        Some(config) => {
            let start = crate::grid::sample_grid(&ExactSolution::Rosenau, layout, t_window)?;
            flow::evolve(&start, t_end, config, &[])
        }
        None => exact_window(&ExactSolution::Rosenau, layout, t_window, t_end, BACKWARD_SNAPSHOTS + 1),
    }
}

/// Exact trajectory of a radial family sampled at `count` uniform times.
pub fn exact_window(sol: &ExactSolution, layout: GridLayout, t_start: f64, t_end: f64, count: usize) -> Result<FlowTrajectory> {
    if count < 2 || !(t_end > t_start) {
        return Err(Error::Range { value: t_end, lo: t_start, hi: f64::INFINITY });
    }
    let step = (t_end - t_start) / (count - 1) as f64;
    let times: Vec<f64> = (0..count).map(|k| t_start + k as f64 * step).collect();
    FlowTrajectory::exact(sol, layout, &times, f64::INFINITY)
}
