//! Uniform one-dimensional grids carrying a rotationally symmetric (or
//! θ-independent) conformal factor.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ChartPoint, ExactSolution, ROSENAU_PERIOD};

/// Minimum node count of a valid grid.
pub const MIN_NODES: usize = 16;

/// Nodes trimmed at every truncated boundary before anything is reported.
pub const BOUNDARY_MARGIN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chart {
    /// Polar coordinates about a center of symmetry, `ρ ≥ 0`, node 0 on the axis.
    RadialPlane,
    /// `ℝ × S¹` with the given angular period.
    Cylinder { period: f64 },
    /// `x = log ρ` on the punctured plane. The stored factor is `ρ² u`; the
    /// disk `ρ < e^{x₀}` is treated as a flat cap of the first node's metric.
    LogPolar,
}

impl Chart {
    pub fn name(&self) -> &'static str {
        match self {
            Chart::RadialPlane => "radial",
            Chart::Cylinder { .. } => "cylinder",
            Chart::LogPolar => "log_polar",
        }
    }

    /// Circumference of the angular direction.
    pub fn period(&self) -> f64 {
        match *self {
            Chart::Cylinder { period } => period,
            _ => TAU,
        }
    }

    /// Whether the chart has a distinguished center (tip) from which
    /// geodesic radii are measured.
    pub fn has_center(&self) -> bool {
        !matches!(self, Chart::Cylinder { .. })
    }

    pub fn point(&self, coord: f64) -> Result<ChartPoint> {
        match self {
            Chart::RadialPlane => ChartPoint::radial(coord),
            Chart::Cylinder { .. } => Ok(ChartPoint::cylinder(coord, 0.0)),
            Chart::LogPolar => Ok(ChartPoint::LogPolar { x: coord }),
        }
    }
}

/// Node placement of a grid: `coord_i = x0 + i h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub chart: Chart,
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl GridLayout {
    /// Radial chart on `[0, extent]` with `n` nodes.
    pub fn radial(extent: f64, n: usize) -> Result<Self> {
        Self::span(Chart::RadialPlane, 0.0, extent, n)
    }

    /// Cylinder chart on `[lo, hi]`.
    pub fn cylinder(period: f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::span(Chart::Cylinder { period }, lo, hi, n)
    }

    /// Log-polar chart on `x ∈ [lo, hi]`.
    pub fn log_polar(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::span(Chart::LogPolar, lo, hi, n)
    }

    pub fn span(chart: Chart, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!("empty extent [{lo}, {hi}]")));
        }
        let layout = GridLayout { chart, x0: lo, h: (hi - lo) / (n - 1) as f64, n };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {}", self.n)));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be > 0, got {}", self.h)));
        }
        match self.chart {
            Chart::RadialPlane if self.x0 != 0.0 => {
                Err(Error::InvalidGrid("radial grids start on the axis (x0 = 0)".into()))
            }
            Chart::Cylinder { period } if !(period > 0.0) => {
                Err(Error::InvalidGrid(format!("cylinder period must be > 0, got {period}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    pub fn lo(&self) -> f64 {
        self.x0
    }

    pub fn hi(&self) -> f64 {
        self.coord(self.n - 1)
    }

    /// Index range of nodes away from truncated boundaries. Only the radial
    /// axis is a genuine boundary-free end.
    pub fn reliable(&self) -> std::ops::RangeInclusive<usize> {
        let last = self.n - 1 - BOUNDARY_MARGIN;
        match self.chart {
            Chart::RadialPlane => 0..=last,
            _ => BOUNDARY_MARGIN..=last,
        }
    }

    /// Same layout with a different resolution over the same extent.
    pub fn with_nodes(&self, n: usize) -> Result<Self> {
        Self::span(self.chart, self.lo(), self.hi(), n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalGrid {
    pub layout: GridLayout,
    pub u: Vec<f64>,
    pub t: f64,
    pub provenance: Option<ExactSolution>,
}

impl ConformalGrid {
    pub fn new(layout: GridLayout, u: Vec<f64>, t: f64, provenance: Option<ExactSolution>) -> Result<Self> {
        layout.validate()?;
        if u.len() != layout.n {
            return Err(Error::InvalidGrid(format!("expected {} values, got {}", layout.n, u.len())));
        }
        if let Some(i) = u.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("u must be positive and finite, node {i} has {}", u[i])));
        }
        Ok(ConformalGrid { layout, u, t, provenance })
    }

    /// Grid whose node values come from an arbitrary positive profile.
    pub fn from_fn(layout: GridLayout, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = (0..layout.n).map(|i| f(layout.coord(i))).collect();
        Self::new(layout, u, t, None)
    }

    pub fn chart(&self) -> Chart {
        self.layout.chart
    }

    pub fn h(&self) -> f64 {
        self.layout.h
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn log_u(&self) -> Vec<f64> {
        self.u.iter().map(|v| v.ln()).collect()
    }

    /// The same metric multiplied by a constant `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let u = self.u.iter().map(|v| v * lambda).collect();
        Self::new(self.layout, u, self.t, None)
    }
}

/// Samples an exact family on the nodes of `layout` at time `t`.
pub fn sample_grid(sol: &ExactSolution, layout: GridLayout, t: f64) -> Result<ConformalGrid> {
    layout.validate()?;
    match (sol.is_cylindrical(), layout.chart) {
        (true, Chart::Cylinder { .. }) | (false, Chart::RadialPlane | Chart::LogPolar) => {}
        _ => {
            return Err(Error::ChartMismatch(format!(
                "{} cannot be sampled on a {} chart",
                sol.name(),
                layout.chart.name()
            )))
        }
    }
    // Radial coordinates are measured from the family's center of symmetry.
    let u = (0..layout.n)
        .map(|i| sol.eval_u(layout.chart.point(layout.coord(i))?, t))
        .collect::<Result<Vec<_>>>()?;
    ConformalGrid::new(layout, u, t, Some(*sol))
}

/// Default chart for the Rosenau solution.
pub fn rosenau_layout(half_width: f64, n: usize) -> Result<GridLayout> {
    GridLayout::cylinder(ROSENAU_PERIOD, -half_width, half_width, n)
}
