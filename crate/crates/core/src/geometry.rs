//! Discrete differential geometry of rotationally symmetric conformal metrics.
//!
//! All quantities are second order in the grid spacing. Radii, lengths and
//! areas are measured from the chart's center (the axis of a radial grid, the
//! tip cap of a log-polar grid). Limits `s → ∞` are never claimed: each
//! asymptotic quantity is reported as its raw value at the largest reliable
//! radius together with a tail estimate fitted over the last quartile of the
//! reliable radii.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::grid::{Chart, ConformalGrid, GridLayout};

/// Absolute change of the flux-form total curvature between the two outermost
/// dyadic extents above which the boundary flux is reported as unsettled.
pub const FLUX_STABILITY_TOL: f64 = 1e-2;

/// Relative tolerance for the Hartman cross-checks, measured against
/// `max(1, |2π - τ|)`.
pub const HARTMAN_TOL: f64 = 0.05;

/// Circle-length growth factor between `s*/2` and `s*` that declares the
/// circumference at infinity divergent.
pub const DIVERGENCE_RATIO: f64 = 1.5;

/// Tolerance on increases of the Bishop–Gromov volume ratio.
pub const BISHOP_GROMOV_TOL: f64 = 1e-4;

/// Discrete Laplacian of a θ-independent function on the chart.
///
/// Radial interior nodes use `φ'' + φ'/ρ` with centered differences; the axis
/// node uses a sixth-order even-function fit through the first three nodes.
/// Truncated ends use one-sided second-order stencils.
pub fn laplacian(layout: &GridLayout, phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let h = layout.h;
    let h2 = h * h;
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let d2 = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / h2;
        out[i] = match layout.chart {
            Chart::RadialPlane => d2 + (phi[i + 1] - phi[i - 1]) / (2.0 * h * layout.coord(i)),
            _ => d2,
        };
    }
    let right = |k: usize| phi[n - 1 - k];
    let d2_right = (2.0 * right(0) - 5.0 * right(1) + 4.0 * right(2) - right(3)) / h2;
    let d1_right = (3.0 * right(0) - 4.0 * right(1) + right(2)) / (2.0 * h);
    out[n - 1] = match layout.chart {
        Chart::RadialPlane => d2_right + d1_right / layout.coord(n - 1),
        _ => d2_right,
    };
    out[0] = match layout.chart {
        Chart::RadialPlane => {
            let d = |k: usize| phi[k] - phi[0];
            (270.0 * d(1) - 27.0 * d(2) + 2.0 * d(3)) / (45.0 * h2)
        }
        _ => (2.0 * phi[0] - 5.0 * phi[1] + 4.0 * phi[2] - phi[3]) / h2,
    };
    out
}

/// First derivative along the chart coordinate (zero on the radial axis).
pub fn derivative(layout: &GridLayout, phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let h = layout.h;
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (phi[i + 1] - phi[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * phi[n - 1] - 4.0 * phi[n - 2] + phi[n - 3]) / (2.0 * h);
    out[0] = match layout.chart {
        Chart::RadialPlane => 0.0,
        _ => (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * h),
    };
    out
}

/// Scalar curvature `R = -(Δ log u)/u` at every node.
pub fn scalar_curvature(grid: &ConformalGrid) -> Vec<f64> {
    let lap = laplacian(&grid.layout, &grid.log_u());
    lap.iter().zip(&grid.u).map(|(l, u)| -l / u).collect()
}

/// Bound on the relative roundoff of a node's curvature above which the
/// node is left out of curvature statistics.
pub const CURVATURE_NOISE_TOL: f64 = 1e-6;

/// Roundoff estimate of `R` at each node: the second difference of `log u`
/// cancels `|log u|`-sized terms and is then divided by `h² u`.
pub fn curvature_noise(grid: &ConformalGrid) -> Vec<f64> {
    let h2 = grid.h() * grid.h();
    let w = grid.log_u();
    let n = w.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            let mag = w[lo..=hi].iter().fold(1.0f64, |m, v| m.max(v.abs()));
            4.0 * f64::EPSILON * mag / (h2 * grid.u[i])
        })
        .collect()
}

/// Reliable nodes whose curvature is resolved in floating point. On far
/// fields where `u` underflows toward zero the curvature is pure roundoff.
pub fn resolved_nodes(grid: &ConformalGrid) -> Vec<usize> {
    let r = scalar_curvature(grid);
    let noise = curvature_noise(grid);
    let nodes: Vec<usize> =
        grid.layout.reliable().filter(|&i| noise[i] <= CURVATURE_NOISE_TOL * r[i].abs().max(1.0)).collect();
    if nodes.is_empty() {
        grid.layout.reliable().collect()
    } else {
        nodes
    }
}

/// Largest curvature over the resolved reliable nodes.
pub fn max_curvature(grid: &ConformalGrid) -> f64 {
    let r = scalar_curvature(grid);
    resolved_nodes(grid).into_iter().map(|i| r[i]).fold(f64::NEG_INFINITY, f64::max)
}

/// Cumulative metric quantities measured outward from the chart center.
#[derive(Debug, Clone)]
pub struct RadialMeasures {
    pub coord: Vec<f64>,
    /// Geodesic distance from the center.
    pub s: Vec<f64>,
    /// Length of the coordinate circle through each node.
    pub ell: Vec<f64>,
    /// Area enclosed by that circle.
    pub area: Vec<f64>,
    /// `∫ R dμ` over the enclosed disk.
    pub curvature_integral: Vec<f64>,
    pub curvature: Vec<f64>,
    /// Index of the largest reliable node.
    pub reliable: usize,
}

impl RadialMeasures {
    pub fn s_star(&self) -> f64 {
        self.s[self.reliable]
    }

    /// Indices of reliable nodes whose radius lies in the last quartile.
    pub fn tail(&self) -> std::ops::RangeInclusive<usize> {
        let cut = 0.75 * self.s_star();
        let start = self.s[..=self.reliable].partition_point(|&v| v < cut);
        start.min(self.reliable.saturating_sub(2))..=self.reliable
    }
}

pub fn radial_measures(grid: &ConformalGrid) -> Result<RadialMeasures> {
    let layout = grid.layout;
    let h = layout.h;
    let coord = layout.coords();
    let curvature = scalar_curvature(grid);
    let sqrt_u: Vec<f64> = grid.u.iter().map(|v| v.sqrt()).collect();
    let (s, ell, area, curvature_integral) = match layout.chart {
        Chart::RadialPlane => {
            let s = fit::cumulative_trapezoid(&sqrt_u, h);
            let ell = coord.iter().zip(&sqrt_u).map(|(r, q)| TAU * r * q).collect();
            let dens: Vec<f64> = coord.iter().zip(&grid.u).map(|(r, u)| TAU * r * u).collect();
            let area = fit::cumulative_trapezoid(&dens, h);
            let kd: Vec<f64> = dens.iter().zip(&curvature).map(|(d, r)| d * r).collect();
            (s, ell, area, fit::cumulative_trapezoid(&kd, h))
        }
        Chart::LogPolar => {
            // flat cap of radius e^{x0} carrying the first node's metric
            let cap_s = sqrt_u[0];
            let cap_area = PI * grid.u[0];
            let s = fit::cumulative_trapezoid(&sqrt_u, h).into_iter().map(|v| v + cap_s).collect();
            let ell = sqrt_u.iter().map(|q| TAU * q).collect();
            let dens: Vec<f64> = grid.u.iter().map(|v| TAU * v).collect();
            let area = fit::cumulative_trapezoid(&dens, h).into_iter().map(|v| v + cap_area).collect();
            let kd: Vec<f64> = dens.iter().zip(&curvature).map(|(d, r)| d * r).collect();
            let cap_k = curvature[0] * cap_area;
            let ci = fit::cumulative_trapezoid(&kd, h).into_iter().map(|v| v + cap_k).collect();
            (s, ell, area, ci)
        }
        Chart::Cylinder { .. } => {
            return Err(Error::ChartMismatch(
                "geodesic radii need a chart with a center (radial or log-polar)".into(),
            ))
        }
    };
    Ok(RadialMeasures { coord, s, ell, area, curvature_integral, curvature, reliable: *layout.reliable().end() })
}

fn check_extent(layout: &GridLayout, coord: f64) -> Result<()> {
    if coord < layout.lo() || coord > layout.hi() || !coord.is_finite() {
        return Err(Error::OutOfExtent { value: coord, lo: layout.lo(), hi: layout.hi() });
    }
    Ok(())
}

/// Cumulative integral evaluated between nodes: the partial cell is
/// integrated by the trapezoid rule on the interpolated integrand.
fn cumulative_at(layout: &GridLayout, cum: &[f64], dens: &[f64], coord: f64) -> f64 {
    let k = (((coord - layout.x0) / layout.h).floor().max(0.0) as usize).min(layout.n - 1);
    let dx = coord - layout.coord(k);
    if dx <= 0.0 || k + 1 >= layout.n {
        return cum[k];
    }
    let w = dx / layout.h;
    let end = dens[k] + w * (dens[k + 1] - dens[k]);
    cum[k] + 0.5 * dx * (dens[k] + end)
}

/// Intrinsic distance from the center to the circle at chart coordinate `coord`.
pub fn geodesic_radius(grid: &ConformalGrid, coord: f64) -> Result<f64> {
    check_extent(&grid.layout, coord)?;
    let m = radial_measures(grid)?;
    let sqrt_u: Vec<f64> = grid.u.iter().map(|v| v.sqrt()).collect();
    Ok(cumulative_at(&grid.layout, &m.s, &sqrt_u, coord))
}

/// Length of the coordinate circle at `coord`.
pub fn circle_length(grid: &ConformalGrid, coord: f64) -> Result<f64> {
    check_extent(&grid.layout, coord)?;
    let layout = grid.layout;
    let coords = layout.coords();
    let u = fit::interp(&coords, &grid.u, coord).expect("checked extent");
    Ok(match layout.chart {
        Chart::RadialPlane => TAU * coord * u.sqrt(),
        chart => chart.period() * u.sqrt(),
    })
}

/// Area of the disk bounded by the circle at `coord` (for a cylinder: the
/// area between the left end and `coord`).
pub fn ball_area(grid: &ConformalGrid, coord: f64) -> Result<f64> {
    check_extent(&grid.layout, coord)?;
    let layout = grid.layout;
    match layout.chart {
        Chart::Cylinder { period } => {
            let dens: Vec<f64> = grid.u.iter().map(|v| period * v).collect();
            let area = fit::cumulative_trapezoid(&dens, layout.h);
            Ok(cumulative_at(&layout, &area, &dens, coord))
        }
        chart => {
            let m = radial_measures(grid)?;
            let dens: Vec<f64> = match chart {
                Chart::LogPolar => grid.u.iter().map(|v| TAU * v).collect(),
                _ => m.coord.iter().zip(&grid.u).map(|(r, u)| TAU * r * u).collect(),
            };
            Ok(cumulative_at(&layout, &m.area, &dens, coord))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalCurvature {
    /// `∫ K dμ` by quadrature over the reliable region.
    pub quadrature: f64,
    /// Gauss–Bonnet boundary flux at the reliable boundary.
    pub flux: f64,
    /// Flux-form value at the previous dyadic extent.
    pub flux_half: f64,
    pub warnings: Vec<String>,
}

impl TotalCurvature {
    pub fn gap(&self) -> f64 {
        (self.quadrature - self.flux).abs()
    }
}

/// Total curvature `τ = ∫ K dμ`, `K = R/2`, by quadrature and by boundary flux.
pub fn total_curvature(grid: &ConformalGrid) -> Result<TotalCurvature> {
    let layout = grid.layout;
    let phi = grid.log_u();
    let dphi = derivative(&layout, &phi);
    let r = scalar_curvature(grid);
    let reliable = layout.reliable();
    let (lo, hi) = (*reliable.start(), *reliable.end());
    let h = layout.h;
    let (quadrature, flux, flux_half) = match layout.chart {
        Chart::RadialPlane => {
            let kd: Vec<f64> = (0..=hi).map(|i| PI * r[i] * grid.u[i] * layout.coord(i)).collect();
            let q = *fit::cumulative_trapezoid(&kd, h).last().expect("nonempty");
            let flux_at = |i: usize| -PI * layout.coord(i) * dphi[i];
            (q, flux_at(hi), flux_at(hi / 2))
        }
        Chart::LogPolar => {
            let kd: Vec<f64> = (0..=hi).map(|i| PI * r[i] * grid.u[i]).collect();
            let cap = 0.5 * r[0] * PI * grid.u[0];
            let q = cap + *fit::cumulative_trapezoid(&kd, h).last().expect("nonempty");
            let flux_at = |i: usize| PI * (2.0 - dphi[i]);
            let back = ((2f64).ln() / h).round() as usize;
            (q, flux_at(hi), flux_at(hi.saturating_sub(back)))
        }
        Chart::Cylinder { period } => {
            let kd: Vec<f64> = (lo..=hi).map(|i| 0.5 * period * r[i] * grid.u[i]).collect();
            let q = *fit::cumulative_trapezoid(&kd, h).last().expect("nonempty");
            let flux_between = |a: usize, b: usize| -0.5 * period * (dphi[b] - dphi[a]);
            let mid = (lo + hi) / 2;
            let quarter = (hi - lo) / 4;
            (q, flux_between(lo, hi), flux_between(mid - quarter, mid + quarter))
        }
    };
    let mut warnings = Vec::new();
    if (flux - flux_half).abs() > FLUX_STABILITY_TOL {
        warnings.push(format!(
            "boundary flux not stabilized: {flux:.6} at the outer extent vs {flux_half:.6} at half extent"
        ));
    }
    Ok(TotalCurvature { quadrature, flux, flux_half, warnings })
}

fn window(m: &RadialMeasures, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let tail = m.tail();
    (m.s[tail.clone()].to_vec(), values[tail].to_vec())
}

fn hartman_scale(target: f64) -> f64 {
    HARTMAN_TOL * target.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApertureEstimate {
    /// `ℓ(s*)/s*` at the largest reliable radius.
    pub ratio: f64,
    /// Tail slope `dℓ/ds` fitted over the last quartile; the reported aperture.
    pub slope: f64,
    /// `2π - τ`.
    pub hartman: f64,
    pub s_star: f64,
    pub warnings: Vec<String>,
}

impl ApertureEstimate {
    pub fn gap(&self) -> f64 {
        (self.slope - self.hartman).abs()
    }
}

/// Aperture `lim ℓ(s)/s` with the Gauss–Bonnet cross-check `2π - τ`.
pub fn aperture(grid: &ConformalGrid) -> Result<ApertureEstimate> {
    let m = radial_measures(grid)?;
    let tau = total_curvature(grid)?.quadrature;
    let (s, ell) = window(&m, &m.ell);
    let (slope, _) = fit::linear_fit(&s, &ell).ok_or_else(|| Error::InvalidGrid("degenerate tail".into()))?;
    let s_star = m.s_star();
    let hartman = TAU - tau;
    let mut warnings = positivity_warnings(&m);
    if (slope - hartman).abs() > hartman_scale(hartman) {
        warnings.push(format!("aperture {slope:.6} and 2π - τ = {hartman:.6} differ by more than 5%"));
    }
    Ok(ApertureEstimate { ratio: m.ell[m.reliable] / s_star, slope, hartman, s_star, warnings })
}

fn positivity_warnings(m: &RadialMeasures) -> Vec<String> {
    let min = m.curvature[..=m.reliable].iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        vec![format!("curvature changes sign (min R = {min:.3e}); positive-curvature estimates may not apply")]
    } else {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircumferenceEstimate {
    /// Extrapolated limit, `+∞` when the circles are still growing.
    pub value: f64,
    /// Circle length at the largest reliable radius.
    pub raw: f64,
    /// Extrapolated minus raw.
    pub tail_correction: f64,
    /// Largest decrease of ℓ along the reliable radii.
    pub monotonicity_defect: f64,
    pub warnings: Vec<String>,
}

impl CircumferenceEstimate {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Circumference at infinity from the circle lengths, with a dyadic
/// extrapolation in the chart radius `ρ`.
pub fn circumference_at_infinity(grid: &ConformalGrid) -> Result<CircumferenceEstimate> {
    let m = radial_measures(grid)?;
    let i_star = m.reliable;
    let raw = m.ell[i_star];
    let s_star = m.s_star();
    let mut warnings = positivity_warnings(&m);
    let mut defect: f64 = 0.0;
    for w in m.ell[..=i_star].windows(2) {
        defect = defect.max(w[0] - w[1]);
    }
    if defect > 1e-6 * raw {
        warnings.push(format!("circle lengths not monotone (max decrease {defect:.3e})"));
    }
    let ell_half = fit::interp(&m.s, &m.ell, 0.5 * s_star).expect("inside range");
    if raw / ell_half > DIVERGENCE_RATIO {
        return Ok(CircumferenceEstimate {
            value: f64::INFINITY,
            raw,
            tail_correction: f64::INFINITY,
            monotonicity_defect: defect,
            warnings,
        });
    }
    // chart radius of each node
    let rho: Vec<f64> = match grid.chart() {
        Chart::LogPolar => m.coord.iter().map(|x| x.exp()).collect(),
        _ => m.coord.clone(),
    };
    let rho_star = rho[i_star];
    let at = |r: f64| fit::interp(&rho, &m.ell, r);
    let value = match (at(0.25 * rho_star), at(0.5 * rho_star)) {
        (Some(a), Some(b)) => fit::aitken(a, b, raw),
        _ => raw,
    };
    Ok(CircumferenceEstimate { value, raw, tail_correction: value - raw, monotonicity_defect: defect, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRatioEstimate {
    /// `A(s*)/(π s*²)`.
    pub ratio: f64,
    /// Quadratic coefficient of the tail fit of `A(s)`, divided by `π`.
    pub limit: f64,
    /// `2 A(s)/s²` read off the tail fit (twice the quadratic coefficient).
    pub area_aperture: f64,
    /// Largest increase of `A(s)/(π s²)` along the reliable radii.
    pub monotonicity_defect: f64,
    pub warnings: Vec<String>,
}

/// Asymptotic volume ratio with the Bishop–Gromov monotonicity defect.
pub fn asymptotic_volume_ratio(grid: &ConformalGrid) -> Result<VolumeRatioEstimate> {
    let m = radial_measures(grid)?;
    let (s, area) = window(&m, &m.area);
    let (a, _, _) = fit::quadratic_fit(&s, &area).ok_or_else(|| Error::InvalidGrid("degenerate tail".into()))?;
    let mut warnings = positivity_warnings(&m);
    let ratios: Vec<f64> = (0..=m.reliable)
        .filter(|&i| m.s[i] > 0.0)
        .map(|i| m.area[i] / (PI * m.s[i] * m.s[i]))
        .collect();
    let mut defect: f64 = 0.0;
    for w in ratios.windows(2) {
        defect = defect.max(w[1] - w[0]);
    }
    if defect > BISHOP_GROMOV_TOL {
        warnings.push(format!("volume ratio not monotone decreasing (max increase {defect:.3e})"));
    }
    let s_star = m.s_star();
    Ok(VolumeRatioEstimate {
        ratio: m.area[m.reliable] / (PI * s_star * s_star),
        limit: a / PI,
        area_aperture: 2.0 * a,
        monotonicity_defect: defect,
        warnings,
    })
}

/// Mean scalar curvature over the geodesic ball of radius `r` about the center.
pub fn average_curvature_k(grid: &ConformalGrid, r: f64) -> Result<f64> {
    let m = radial_measures(grid)?;
    average_curvature_from(&m, r)
}

pub fn average_curvature_from(m: &RadialMeasures, r: f64) -> Result<f64> {
    let s_star = m.s_star();
    if !(r > 0.0) || r > s_star {
        return Err(Error::OutOfExtent { value: r, lo: 0.0, hi: s_star });
    }
    let s = &m.s[..=m.reliable];
    let total = fit::interp(s, &m.curvature_integral[..=m.reliable], r).expect("checked");
    let vol = fit::interp(s, &m.area[..=m.reliable], r).expect("checked");
    Ok(total / vol)
}

/// All invariants of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub t: f64,
    pub tau: f64,
    pub tau_flux: f64,
    /// Tail-slope aperture; `None` on charts without a center.
    pub aperture: Option<f64>,
    pub aperture_ratio: Option<f64>,
    pub circumference: Option<f64>,
    pub avr: Option<f64>,
    pub avr_ratio: Option<f64>,
    pub r_max: f64,
    pub k_samples: Vec<(f64, f64)>,
    /// `|dℓ/ds - (2π - τ)|` over the tail.
    pub hartman_defect_length: Option<f64>,
    /// `|2A/s² - (2π - τ)|` over the tail.
    pub hartman_defect_area: Option<f64>,
    pub reliable_radius: Option<f64>,
    pub warnings: Vec<String>,
}

/// Number of radii at which `k(o, r)` is sampled.
pub const K_SAMPLES: usize = 16;

pub fn invariant_report(grid: &ConformalGrid) -> Result<InvariantReport> {
    let tc = total_curvature(grid)?;
    let r_max = max_curvature(grid);
    let mut warnings = tc.warnings.clone();
    let mut report = InvariantReport {
        t: grid.t,
        tau: tc.quadrature,
        tau_flux: tc.flux,
        aperture: None,
        aperture_ratio: None,
        circumference: None,
        avr: None,
        avr_ratio: None,
        r_max,
        k_samples: Vec::new(),
        hartman_defect_length: None,
        hartman_defect_area: None,
        reliable_radius: None,
        warnings: Vec::new(),
    };
    if grid.chart().has_center() {
        let m = radial_measures(grid)?;
        let ap = aperture(grid)?;
        let c = circumference_at_infinity(grid)?;
        let v = asymptotic_volume_ratio(grid)?;
        let s_star = m.s_star();
        report.k_samples = (1..=K_SAMPLES)
            .map(|k| {
                let r = s_star * k as f64 / K_SAMPLES as f64;
                average_curvature_from(&m, r).map(|kr| (r, kr))
            })
            .collect::<Result<_>>()?;
        report.aperture = Some(ap.slope);
        report.aperture_ratio = Some(ap.ratio);
        report.circumference = Some(c.value);
        report.avr = Some(v.limit);
        report.avr_ratio = Some(v.ratio);
        report.hartman_defect_length = Some(ap.gap());
        report.hartman_defect_area = Some((v.area_aperture - ap.hartman).abs());
        report.reliable_radius = Some(s_star);
        for w in ap.warnings.into_iter().chain(c.warnings).chain(v.warnings) {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }
    report.warnings = warnings;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactSolution;
    use crate::grid::sample_grid;

    fn cigar(n: usize) -> ConformalGrid {
        sample_grid(&ExactSolution::Cigar { r0: 4.0 }, GridLayout::radial(50.0, n).unwrap(), 0.0).unwrap()
    }

    fn flat() -> ConformalGrid {
        sample_grid(&ExactSolution::Flat, GridLayout::radial(50.0, 2000).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn cigar_tip_curvature() {
        let r = scalar_curvature(&cigar(2000));
        assert!((r[0] - 4.0).abs() < 1e-6, "{}", r[0]);
        assert!((max_curvature(&cigar(2000)) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn flat_curvature_vanishes() {
        assert!(scalar_curvature(&flat()).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn geodesic_radius_of_cigar_and_flat() {
        let g = cigar(2000);
        assert_eq!(geodesic_radius(&g, 0.0).unwrap(), 0.0);
        let s1 = geodesic_radius(&g, 1.0).unwrap();
        assert!((s1 - 1f64.asinh()).abs() < 1e-4 && (s1 - 0.8814).abs() < 1e-4);
        assert!((geodesic_radius(&flat(), 7.3).unwrap() - 7.3).abs() < 1e-12);
        assert!(geodesic_radius(&g, 51.0).is_err());
        let cyl = sample_grid(&ExactSolution::Rosenau, crate::grid::rosenau_layout(5.0, 64).unwrap(), -1.0).unwrap();
        assert!(geodesic_radius(&cyl, 0.0).is_err());
    }

    #[test]
    fn lengths_and_areas() {
        let g = cigar(2000);
        for &rho in &[0.5, 3.0, 20.0] {
            let ell = circle_length(&g, rho).unwrap();
            assert!((ell - TAU * rho / (1.0 + rho * rho).sqrt()).abs() < 1e-3, "{rho}");
            let a = ball_area(&g, rho).unwrap();
            assert!((a - PI * (1.0 + rho * rho).ln()).abs() < 1e-3, "{rho}: {a}");
        }
        let f = flat();
        assert!((circle_length(&f, 3.0).unwrap() - TAU * 3.0).abs() < 1e-12);
        assert!((ball_area(&f, 3.0).unwrap() - PI * 9.0).abs() < 1e-9);
    }

    #[test]
    fn total_curvature_values() {
        let tc = total_curvature(&cigar(2000)).unwrap();
        assert!((tc.quadrature / TAU - 1.0).abs() < 0.01);
        assert!((tc.flux / TAU - 1.0).abs() < 0.01);
        assert!(total_curvature(&flat()).unwrap().quadrature.abs() < 1e-12);
    }

    #[test]
    fn flat_invariants() {
        let r = invariant_report(&flat()).unwrap();
        assert!(r.tau.abs() < 1e-12);
        assert!((r.aperture.unwrap() - TAU).abs() < 1e-9);
        assert!(r.circumference.unwrap().is_infinite());
        assert!((r.avr.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.r_max.abs() < 1e-12);
        assert!(r.k_samples.iter().all(|(_, k)| k.abs() < 1e-12));
    }

    #[test]
    fn k_outside_extent_is_an_error() {
        assert!(average_curvature_k(&cigar(500), 100.0).is_err());
        assert!(average_curvature_k(&cigar(500), 0.0).is_err());
    }
}
