//! Closed-form solutions of `∂u/∂t = Δ log u` used as oracles throughout the
//! crate.
//!
//! Every family is evaluated in log form so that far-field samples neither
//! overflow nor lose relative precision. The cigar is carried by its exact
//! Daskalopoulos–Sesum representation `u = (4/R₀) / (ρ² + e^{R₀ t})`, which at
//! `t = 0` is the familiar `(4/R₀)/(1 + ρ²)` with tip curvature `R₀`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular period of the Rosenau cylinder chart. With this period the two ends
/// close up smoothly into a sphere of total curvature `4π`.
pub const ROSENAU_PERIOD: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExactSolution {
    /// Steady soliton with tip curvature `r0`.
    Cigar { r0: f64 },
    /// Compact ancient solution on the cylinder chart, `t < 0`.
    Rosenau,
    /// Round shrinking sphere with `R(t) = 1/(-t)`, `t < 0`.
    Sphere,
    Flat,
    /// Eternal gradient soliton `2 / (β(|x - x₀|² + δ e^{2βt}))`.
    DsSoliton { beta: f64, delta: f64, center: [f64; 2] },
}

/// A point in one of the supported coordinate charts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartPoint {
    /// Distance from the center of symmetry of the family.
    Radial { rho: f64 },
    /// Cartesian plane coordinates.
    Plane { x: f64, y: f64 },
    /// Cylinder `ℝ × S¹`; `theta` is reduced to `[0, 2π)`.
    Cylinder { x: f64, theta: f64 },
    /// Log-polar chart `x = log ρ` of the punctured plane; the factor
    /// returned in this chart is `ρ² u(ρ)`.
    LogPolar { x: f64 },
}

impl ChartPoint {
    pub fn radial(rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("radial coordinate must be finite and >= 0, got {rho}")));
        }
        Ok(ChartPoint::Radial { rho })
    }

    pub fn cylinder(x: f64, theta: f64) -> Self {
        ChartPoint::Cylinder { x, theta: theta.rem_euclid(TAU) }
    }
}

/// `log cosh y` without overflow.
pub(crate) fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `sech y` without overflow.
pub(crate) fn sech(y: f64) -> f64 {
    let e = (-y.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// `log sinh a` for `a > 0` without overflow.
fn log_sinh(a: f64) -> f64 {
    a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2
}

/// `log(r² + D)` given `2 log r` and `log D`.
fn log_sum_sq(two_log_r: f64, log_d: f64) -> f64 {
    if two_log_r > log_d {
        two_log_r + (log_d - two_log_r).exp().ln_1p()
    } else {
        log_d + (two_log_r - log_d).exp().ln_1p()
    }
}

impl ExactSolution {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        match *self {
            ExactSolution::Cigar { r0 } => positive("cigar r0", r0),
            ExactSolution::DsSoliton { beta, delta, center } => {
                positive("beta", beta)?;
                positive("delta", delta)?;
                if center.iter().all(|c| c.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Domain("soliton center must be finite".into()))
                }
            }
            ExactSolution::Rosenau | ExactSolution::Sphere | ExactSolution::Flat => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExactSolution::Cigar { .. } => "cigar",
            ExactSolution::Rosenau => "rosenau",
            ExactSolution::Sphere => "sphere",
            ExactSolution::Flat => "flat",
            ExactSolution::DsSoliton { .. } => "ds_soliton",
        }
    }

    /// True for families that live on the cylinder chart.
    pub fn is_cylindrical(&self) -> bool {
        matches!(self, ExactSolution::Rosenau)
    }

    /// Families that become singular at `t = 0`.
    pub fn singular_at_zero(&self) -> bool {
        matches!(self, ExactSolution::Rosenau | ExactSolution::Sphere)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite, got {t}")));
        }
        if self.singular_at_zero() && t >= 0.0 {
            return Err(Error::Domain(format!("{} exists only for t < 0, got t = {t}", self.name())));
        }
        Ok(())
    }

    /// `(β, log D)` of the soliton representation, where `D = δ e^{2βt}`.
    fn soliton_params(&self, t: f64) -> Option<(f64, f64, [f64; 2])> {
        match *self {
            ExactSolution::Cigar { r0 } => Some((0.5 * r0, r0 * t, [0.0, 0.0])),
            ExactSolution::DsSoliton { beta, delta, center } => {
                Some((beta, delta.ln() + 2.0 * beta * t, center))
            }
            _ => None,
        }
    }

    /// Resolves a plane-type point to `2 log r` relative to the family's
    /// center, together with the extra log-factor the chart contributes.
    fn planar(&self, p: ChartPoint, center: [f64; 2]) -> Result<(f64, f64)> {
        match p {
            ChartPoint::Radial { rho } => Ok((2.0 * rho.ln(), 0.0)),
            ChartPoint::Plane { x, y } => {
                let dx = x - center[0];
                let dy = y - center[1];
                Ok(((dx * dx + dy * dy).ln(), 0.0))
            }
            ChartPoint::LogPolar { x } => Ok((2.0 * x, 2.0 * x)),
            ChartPoint::Cylinder { .. } => Err(Error::ChartMismatch(format!(
                "{} is defined on the plane, not the cylinder",
                self.name()
            ))),
        }
    }

    /// `log u(p, t)` in the chart of `p`.
    pub fn eval_log_u(&self, p: ChartPoint, t: f64) -> Result<f64> {
        self.validate()?;
        self.check_time(t)?;
        match *self {
            ExactSolution::Rosenau => match p {
                ChartPoint::Cylinder { x, .. } => {
                    let a = -t;
                    // cosh x + cosh t, evaluated in log form
                    let (lx, lt) = (log_cosh(x), log_cosh(t));
                    let (hi, lo) = if lx > lt { (lx, lt) } else { (lt, lx) };
                    let log_den = hi + (lo - hi).exp().ln_1p();
                    Ok(log_sinh(a) - log_den)
                }
                _ => Err(Error::ChartMismatch("rosenau lives on the cylinder chart".into())),
            },
            ExactSolution::Flat => {
                let (_, extra) = self.planar(p, [0.0, 0.0])?;
                Ok(extra)
            }
            ExactSolution::Sphere => {
                let (two_log_r, extra) = self.planar(p, [0.0, 0.0])?;
                let log_one_plus = log_sum_sq(two_log_r, 0.0);
                Ok((-8.0 * t).ln() - 2.0 * log_one_plus + extra)
            }
            ExactSolution::Cigar { .. } | ExactSolution::DsSoliton { .. } => {
                let (beta, log_d, center) = self.soliton_params(t).expect("soliton family");
                let (two_log_r, extra) = self.planar(p, center)?;
                Ok((2.0 / beta).ln() - log_sum_sq(two_log_r, log_d) + extra)
            }
        }
    }

    /// Conformal factor `u(p, t)` of `g = u (flat metric)` in the chart of `p`.
    pub fn eval_u(&self, p: ChartPoint, t: f64) -> Result<f64> {
        self.eval_log_u(p, t).map(f64::exp)
    }

    /// Scalar curvature `R = -(Δ log u)/u` of the exact metric.
    pub fn eval_r(&self, p: ChartPoint, t: f64) -> Result<f64> {
        self.validate()?;
        self.check_time(t)?;
        match *self {
            ExactSolution::Rosenau => match p {
                ChartPoint::Cylinder { x, .. } => {
                    // (1 + cosh t cosh x) / (sinh(-t)(cosh x + cosh t)), divided through by cosh x cosh t
                    let (sx, st) = (sech(x), sech(t));
                    Ok((sx * st + 1.0) / ((-t).sinh() * (st + sx)))
                }
                _ => Err(Error::ChartMismatch("rosenau lives on the cylinder chart".into())),
            },
            ExactSolution::Flat => self.planar(p, [0.0, 0.0]).map(|_| 0.0),
            ExactSolution::Sphere => self.planar(p, [0.0, 0.0]).map(|_| -1.0 / t),
            ExactSolution::Cigar { .. } | ExactSolution::DsSoliton { .. } => {
                let (beta, log_d, center) = self.soliton_params(t).expect("soliton family");
                let (two_log_r, _) = self.planar(p, center)?;
                Ok(2.0 * beta / (1.0 + (two_log_r - log_d).exp()))
            }
        }
    }

    /// Analytic `∂u/∂t` in the chart of `p`.
    pub fn eval_du_dt(&self, p: ChartPoint, t: f64) -> Result<f64> {
        self.validate()?;
        self.check_time(t)?;
        match *self {
            ExactSolution::Rosenau => match p {
                ChartPoint::Cylinder { x, .. } => {
                    // -(1 + cosh x cosh t)/(cosh x + cosh t)²
                    let ratio = (log_cosh(x) - log_cosh(t)).exp();
                    Ok(-(sech(x) * sech(t) + 1.0) / (ratio + 2.0 + 1.0 / ratio))
                }
                _ => Err(Error::ChartMismatch("rosenau lives on the cylinder chart".into())),
            },
            ExactSolution::Flat => self.planar(p, [0.0, 0.0]).map(|_| 0.0),
            ExactSolution::Sphere => {
                let (two_log_r, extra) = self.planar(p, [0.0, 0.0])?;
                Ok(-8.0 * (extra - 2.0 * log_sum_sq(two_log_r, 0.0)).exp())
            }
            ExactSolution::Cigar { .. } | ExactSolution::DsSoliton { .. } => {
                let (_, log_d, center) = self.soliton_params(t).expect("soliton family");
                let (two_log_r, extra) = self.planar(p, center)?;
                // -4D/(r² + D)²
                Ok(-4.0 * (log_d + extra - 2.0 * log_sum_sq(two_log_r, log_d)).exp())
            }
        }
    }
}

/// Maximum curvature of the Rosenau solution, attained at the poles.
pub fn rosenau_rmax(t: f64) -> Result<f64> {
    if !(t < 0.0) {
        return Err(Error::Domain(format!("rosenau exists only for t < 0, got t = {t}")));
    }
    Ok(1.0 / (-t).tanh())
}
