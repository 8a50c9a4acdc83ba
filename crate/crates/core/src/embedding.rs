//! Surfaces of revolution realizing rotationally symmetric metrics of
//! nonnegative curvature.
//!
//! A metric `ds² + h(s)² dθ²` with `|h'| ≤ 1` is the induced metric of the
//! surface `(r, z) = (h(s), ∫ √(1 − h'²) ds)` in cylindrical coordinates.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::geometry::{self, derivative};
use crate::grid::{Chart, ConformalGrid};

/// Slack allowed on `h'` outside `[0, 1]`; values within it are clamped.
pub const HPRIME_TOL: f64 = 1e-8;

/// Mean tail slope of `h` above which the circumference is declared infinite.
pub const GROWTH_SLOPE: f64 = 0.05;

/// Circumferential radius as a function of distance from the tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevolutionProfile {
    pub s: Vec<f64>,
    /// `h(s) = ℓ(s)/2π`.
    pub hcirc: Vec<f64>,
    pub hprime: Vec<f64>,
}

/// Reads the profile off a radial or log-polar grid, over its reliable nodes.
pub fn profile_from_metric(grid: &ConformalGrid) -> Result<RevolutionProfile> {
    let m = geometry::radial_measures(grid)?;
    let dlog = derivative(&grid.layout, &grid.log_u());
    let last = m.reliable;
    let mut s = Vec::with_capacity(last + 2);
    let mut hcirc = Vec::with_capacity(last + 2);
    let mut hprime = Vec::with_capacity(last + 2);
    if grid.chart() == Chart::LogPolar {
        // the flat cap contributes the smooth tip
        s.push(0.0);
        hcirc.push(0.0);
        hprime.push(1.0);
    }
    for i in 0..=last {
        let hp = match grid.chart() {
            Chart::RadialPlane => 1.0 + 0.5 * m.coord[i] * dlog[i],
            _ => 0.5 * dlog[i],
        };
        if !(-HPRIME_TOL..=1.0 + HPRIME_TOL).contains(&hp) {
            return Err(Error::Obstruction { s: m.s[i], hprime: hp });
        }
        s.push(m.s[i]);
        hcirc.push(m.ell[i] / TAU);
        hprime.push(hp.clamp(0.0, 1.0));
    }
    Ok(RevolutionProfile { s, hcirc, hprime })
}

/// Meridian of the surface of revolution, tip at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSurface {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub hprime: Vec<f64>,
    pub zprime: Vec<f64>,
}

pub fn embed(profile: &RevolutionProfile) -> Result<EmbeddedSurface> {
    for (s, &hp) in profile.s.iter().zip(&profile.hprime) {
        if !(-HPRIME_TOL..=1.0 + HPRIME_TOL).contains(&hp) {
            return Err(Error::Obstruction { s: *s, hprime: hp });
        }
    }
    let zprime: Vec<f64> = profile
        .hprime
        .iter()
        .map(|hp| {
            let hp = hp.clamp(0.0, 1.0);
            (1.0 - hp * hp).sqrt()
        })
        .collect();
    let z = fit::cumulative_trapezoid_nonuniform(&profile.s, &zprime);
    Ok(EmbeddedSurface {
        s: profile.s.clone(),
        r: profile.hcirc.clone(),
        z,
        hprime: profile.hprime.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        zprime,
    })
}

impl EmbeddedSurface {
    /// Largest departure from unit speed of the meridian and from `r = h`.
    pub fn isometry_defect(&self, profile: &RevolutionProfile) -> f64 {
        let speed = self
            .hprime
            .iter()
            .zip(&self.zprime)
            .map(|(a, b)| (a * a + b * b - 1.0).abs())
            .fold(0.0, f64::max);
        let radius = self.r.iter().zip(&profile.hcirc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        speed.max(radius)
    }

    /// Meridian distance at which the surface first reaches height `c`.
    fn arc_at_height(&self, c: f64) -> Result<f64> {
        let lo = self.z[0];
        let hi = *self.z.last().expect("nonempty");
        if !(c >= lo && c <= hi) || hi <= lo {
            return Err(Error::Range { value: c, lo, hi });
        }
        let k = self.z.partition_point(|&v| v < c);
        if k == 0 {
            return Ok(self.s[0]);
        }
        let (z0, z1) = (self.z[k - 1], self.z[k]);
        let w = if z1 > z0 { (c - z0) / (z1 - z0) } else { 0.0 };
        Ok(self.s[k - 1] + w * (self.s[k] - self.s[k - 1]))
    }
}

/// Lengths of the horizontal sections `{z = c}`.
pub fn level_lengths(surface: &EmbeddedSurface, heights: &[f64]) -> Result<Vec<f64>> {
    heights
        .iter()
        .map(|&c| {
            let s = surface.arc_at_height(c)?;
            let r = fit::interp(&surface.s, &surface.r, s).expect("inside profile");
            Ok(TAU * r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircumferenceWidth {
    /// `2π lim h`; infinite when the radius still grows linearly.
    pub circumference: f64,
    /// Equal to the circumference for surfaces of revolution.
    pub width: f64,
    /// Circumference at the last sample, before extrapolation.
    pub raw: f64,
    /// Fitted decay rate of `lim h − h(s)`.
    pub decay_rate: f64,
    pub tail_slope: f64,
    pub rotationally_symmetric: bool,
}

/// Extrapolates `h(s) ≈ L − a e^{−b s}` from three equally spaced points of
/// the last quartile.
pub fn circumference_and_width(surface: &EmbeddedSurface) -> Result<CircumferenceWidth> {
    let n = surface.s.len();
    if n < 4 {
        return Err(Error::InsufficientWindow(format!("profile has {n} samples")));
    }
    let s_end = surface.s[n - 1];
    let s_q = 0.75 * s_end;
    let start = surface.s.partition_point(|&v| v < s_q).min(n - 2);
    let tail = &surface.hprime[start..];
    let tail_slope = tail.iter().sum::<f64>() / tail.len() as f64;
    let raw = TAU * surface.r[n - 1];
    if tail_slope > GROWTH_SLOPE {
        return Ok(CircumferenceWidth {
            circumference: f64::INFINITY,
            width: f64::INFINITY,
            raw,
            decay_rate: 0.0,
            tail_slope,
            rotationally_symmetric: true,
        });
    }
    let at = |s: f64| fit::interp(&surface.s, &surface.r, s).expect("inside profile");
    let mid = 0.5 * (s_q + s_end);
    let (h1, h2, h3) = (at(s_q), at(mid), at(s_end));
    let limit = fit::aitken(h1, h2, h3);
    let ratio = (h3 - h2) / (h2 - h1);
    let decay_rate = if ratio > 0.0 && ratio < 1.0 { -ratio.ln() / (mid - s_q) } else { 0.0 };
    let circumference = TAU * limit;
    Ok(CircumferenceWidth {
        circumference,
        width: circumference,
        raw,
        decay_rate,
        tail_slope,
        rotationally_symmetric: true,
    })
}
