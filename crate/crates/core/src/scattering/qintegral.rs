use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::{fit_line, LineFit};
use crate::lattice::Site;
use crate::linalg::gauss_legendre;

/// Gradient magnitude and curvature below these count as degenerate.
const REGULARITY_FLOOR: f64 = 1e-8;

/// Smooth compactly supported profiles on `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpProfile {
    /// `exp(-1 / (1 - s^2))`.
    Standard,
    /// `exp(-2 / (1 - s^4)) (1 + s/2)`: flatter top, asymmetric.
    Skewed,
}

impl BumpProfile {
    pub fn eval(self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            BumpProfile::Standard => (-1.0 / (1.0 - s * s)).exp(),
            BumpProfile::Skewed => (-2.0 / (1.0 - s.powi(4))).exp() * (1.0 + 0.5 * s),
        }
    }
}

/// The oscillatory integral over one chart of the level curve
/// `{a(ξ) = τ1}` in d = 2.
///
/// The chart is the angular sector `|θ| < half_width` seen from the centre
/// of the curve (`0` for `τ1 < 4`, `(π, π)` for `τ1 > 4`), and the bump is
/// `profile(θ / half_width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QIntegralSpec {
    pub tau1: f64,
    pub bump: BumpProfile,
    pub half_width: f64,
    pub js: Vec<Site>,
    /// Quadrature nodes per oscillation period at the initial resolution.
    pub points_per_period: usize,
    /// Relative change under panel halving accepted as converged.
    pub refinement_tolerance: f64,
    pub max_panels: usize,
}

impl QIntegralSpec {
    pub fn new(tau1: f64, bump: BumpProfile, js: Vec<Site>) -> Result<Self> {
        let spec = QIntegralSpec {
            tau1,
            bump,
            half_width: 1.4,
            js,
            points_per_period: 20,
            refinement_tolerance: 1e-6,
            max_panels: 1 << 16,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau1 > 0.0 && self.tau1 < 8.0) || (self.tau1 - 4.0).abs() < 1e-6 {
            return Err(LabError::Regularity(format!(
                "tau1 = {} is not inside a regular band (0, 4) or (4, 8)",
                self.tau1
            )));
        }
        if !(self.half_width > 0.0 && self.half_width < PI) {
            return Err(LabError::Config(format!(
                "chart half-width {} outside (0, π)",
                self.half_width
            )));
        }
        if self.points_per_period < 20 {
            return Err(LabError::Accuracy {
                what: "points per oscillation period",
                target: 20.0,
                achieved: self.points_per_period as f64,
            });
        }
        if self.js.iter().any(|j| j.dim() != 2) {
            return Err(LabError::Unsupported(
                "the Q-integral is implemented for d = 2 only".into(),
            ));
        }
        Ok(())
    }
}

/// One point of the chart: the curve point, the bump weight and the Jacobian
/// factor `ω` with `dξ = ω dτ1 dθ`.
struct ChartPoint {
    xi: [f64; 2],
    weight: f64,
}

const GAUSS_ORDER: usize = 16;

/// `Q(τ1, j) = |∫ e^{i j·ξ(τ1, θ)} φ(θ) ω(τ1, θ) dθ|`.
pub fn q_integral(spec: &QIntegralSpec, j: &Site) -> Result<f64> {
    spec.validate()?;
    if j.dim() != 2 {
        return Err(LabError::DimensionMismatch {
            expected: 2,
            got: j.dim(),
        });
    }
    let jv = [j.coords()[0] as f64, j.coords()[1] as f64];
    let tau = if spec.tau1 < 4.0 { spec.tau1 } else { 8.0 - spec.tau1 };

    let arc = chart_arc_length(tau, spec.half_width)?;
    let periods = j.norm() * arc / (2.0 * PI);
    let nodes = (periods * spec.points_per_period as f64).max(4.0 * GAUSS_ORDER as f64);
    let mut panels = (nodes / GAUSS_ORDER as f64).ceil() as usize;
    let mut previous = integrate(spec, tau, jv, panels)?;
    loop {
        panels *= 2;
        if panels > spec.max_panels {
            return Err(LabError::Accuracy {
                what: "Q-integral under panel refinement",
                target: spec.refinement_tolerance,
                achieved: f64::NAN,
            });
        }
        let refined = integrate(spec, tau, jv, panels)?;
        let change = (refined - previous).norm();
        // The floor covers integrals that vanish to roundoff.
        if change <= spec.refinement_tolerance * refined.norm() || change < 1e-15 {
            return Ok(refined.norm());
        }
        previous = refined;
    }
}

fn integrate(spec: &QIntegralSpec, tau: f64, j: [f64; 2], panels: usize) -> Result<Complex64> {
    let (x, w) = gauss_legendre(GAUSS_ORDER);
    let h = 2.0 * spec.half_width / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = -spec.half_width + (p as f64 + 0.5) * h;
        for (xk, wk) in x.iter().zip(&w) {
            let theta = mid + 0.5 * h * xk;
            let phi = spec.bump.eval(theta / spec.half_width);
            let point = chart_point(tau, theta)?;
            if phi == 0.0 {
                continue;
            }
            let phase = j[0] * point.xi[0] + j[1] * point.xi[1];
            sum += Complex64::from_polar(phi * point.weight * 0.5 * h * wk, phase);
        }
    }
    Ok(sum)
}

fn chart_arc_length(tau: f64, half_width: f64) -> Result<f64> {
    let samples = 256;
    let mut last = chart_point(tau, -half_width)?.xi;
    let mut length = 0.0;
    for k in 1..=samples {
        let theta = -half_width + 2.0 * half_width * k as f64 / samples as f64;
        let xi = chart_point(tau, theta)?.xi;
        length += ((xi[0] - last[0]).powi(2) + (xi[1] - last[1]).powi(2)).sqrt();
        last = xi;
    }
    Ok(length)
}

/// Intersects the ray at angle `θ` with `{a = tau}` (`0 < tau < 4`) and
/// checks gradient, transversality and curvature there.
fn chart_point(tau: f64, theta: f64) -> Result<ChartPoint> {
    let (s, c) = theta.sin_cos();
    let a = |r: f64| 4.0 - 2.0 * (r * c).cos() - 2.0 * (r * s).cos();
    let da = |r: f64| 2.0 * c * (r * c).sin() + 2.0 * s * (r * s).sin();
    // a is increasing along the ray until one coordinate reaches π, where
    // a >= 4 > tau.
    let (mut lo, mut hi) = (0.0, PI / c.abs().max(s.abs()));
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = a(r) - tau;
        if g.abs() < 1e-15 || hi - lo < 1e-15 {
            break;
        }
        if g > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let d = da(r);
        let newton = r - g / d;
        r = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let xi = [r * c, r * s];
    let grad = [2.0 * xi[0].sin(), 2.0 * xi[1].sin()];
    let gnorm = grad[0].hypot(grad[1]);
    let radial = grad[0] * c + grad[1] * s;
    // Level-curve curvature; the Hessian of a is diagonal.
    let (hxx, hyy) = (2.0 * xi[0].cos(), 2.0 * xi[1].cos());
    let curvature = (hxx * grad[1] * grad[1] + hyy * grad[0] * grad[0]).abs() / gnorm.powi(3);
    if !(gnorm > REGULARITY_FLOOR && radial > REGULARITY_FLOOR) {
        return Err(LabError::Regularity(format!(
            "gradient degenerate on the chart at θ = {theta}"
        )));
    }
    if !(curvature > REGULARITY_FLOOR) {
        return Err(LabError::Regularity(format!(
            "curvature vanishes on the chart at θ = {theta}"
        )));
    }
    Ok(ChartPoint {
        xi,
        weight: r / radial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QDecayFit {
    /// Slope of `log Q` against `log |j|`.
    pub exponent: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub fit: LineFit,
    /// `(|j|, Q)` pairs in input order.
    pub points: Vec<(f64, f64)>,
}

/// Minimum ratio between the largest and smallest `|j|` of a decay fit.
pub const MIN_DECAY_SPAN: f64 = 10.0;

pub fn q_decay_fit(spec: &QIntegralSpec) -> Result<QDecayFit> {
    spec.validate()?;
    q_decay_fit_with(&spec.js, |j| q_integral(spec, j))
}

/// Log-log slope of an arbitrary `Q(j)`; the integrand is pluggable so the
/// fitter can be checked on data with known decay.
pub fn q_decay_fit_with(
    js: &[Site],
    q: impl Fn(&Site) -> Result<f64> + Sync,
) -> Result<QDecayFit> {
    let norms: Vec<f64> = js.iter().map(Site::norm).collect();
    let (min, max) = norms
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &n| (a.min(n), b.max(n)));
    if js.len() < 3 || !(min > 0.0) || max / min < MIN_DECAY_SPAN {
        return Err(LabError::InsufficientData(format!(
            "decay fit needs >= 3 nonzero |j| spanning a factor {MIN_DECAY_SPAN}"
        )));
    }
    let values: Vec<f64> = js.par_iter().map(&q).collect::<Result<_>>()?;
    if let Some(bad) = values.iter().position(|v| !(*v > 0.0)) {
        return Err(LabError::InsufficientData(format!(
            "Q vanished at j = {}",
            js[bad]
        )));
    }
    let x: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&x, &y)?;
    Ok(QDecayFit {
        exponent: fit.slope,
        residual: fit.rms,
        fit,
        points: norms.into_iter().zip(values).collect(),
    })
}
