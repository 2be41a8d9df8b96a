use serde::Serialize;

use crate::error::{LabError, Result};
use crate::green::GreenKernel;
use crate::lattice::{Potential, Site};

/// The bound state of `-Δ + β P0`: the root of `1 + β G(λ; 0) = 0` below 0.
///
/// The bracket is `(-|β| - 4d, -guard)`, with `guard` the kernel's spectral
/// guard, moved down by decades while the Green quadrature cannot resolve
/// its upper end. In d >= 3, `G(0⁻; 0)` is finite and small `|β|` has no
/// root; in d <= 2 a root always exists but for small `|β|` it may lie
/// above the resolvable bracket, which is reported the same way.
pub fn impurity_level(kernel: &GreenKernel, beta: f64) -> Result<f64> {
    if !(beta < 0.0) || !beta.is_finite() {
        return Err(LabError::Config(format!(
            "impurity level needs beta < 0, got {beta}"
        )));
    }
    let dim = kernel.dim();
    let origin = Site::origin(dim);
    let f = |lambda: f64| -> Result<f64> { Ok(1.0 + beta * kernel.eval_real(lambda, &origin)?) };
    let mut lo = -beta.abs() - 4.0 * dim as f64;
    let mut f_lo = f(lo)?;
    // Next to the band edge the quadrature may not reach its tolerance;
    // back off by decades until it does.
    let mut hi = -kernel.config().spectral_guard;
    let mut f_hi = loop {
        match f(hi) {
            Ok(v) => break v,
            Err(LabError::Accuracy { .. }) if hi * 10.0 > lo => hi *= 10.0,
            Err(e) => return Err(e),
        }
    };
    // f increases to 1 as λ → -∞ and decreases towards 0⁻.
    if !(f_lo > 0.0 && f_hi <= 0.0) {
        return Err(LabError::NoBoundState {
            beta,
            lower: lo,
            upper: hi,
        });
    }
    // Bisection until the bracket is small, then secant steps kept inside
    // it; a secant step that fails to halve the bracket is followed by a
    // bisection, which stops one-sided stagnation.
    let mut bisect_next = false;
    for _ in 0..400 {
        let width = hi - lo;
        let candidate = if bisect_next || width > 1e-3 * (1.0 + hi.abs()) {
            0.5 * (lo + hi)
        } else {
            let secant = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if secant > lo && secant < hi {
                secant
            } else {
                0.5 * (lo + hi)
            }
        };
        let value = f(candidate)?;
        if value.abs() <= 1e-14 || width <= 4.0 * f64::EPSILON * candidate.abs() {
            return Ok(candidate);
        }
        if value > 0.0 {
            lo = candidate;
            f_lo = value;
        } else {
            hi = candidate;
            f_hi = value;
        }
        bisect_next = !bisect_next && hi - lo > 0.5 * width;
    }
    let root = 0.5 * (lo + hi);
    let residual = f(root)?.abs();
    if residual <= 1e-10 {
        Ok(root)
    } else {
        Err(LabError::NonConvergence {
            what: "impurity level",
            iterations: 400,
            residual,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GvScanRow {
    pub site: Site,
    pub amplitude: f64,
    /// `|n|^{-d-ε}`.
    pub window: f64,
    /// Grid count times spacing.
    pub measure: f64,
    /// `ε^{-1} ‖V‖²_∞ |n|^{-d-ε}`.
    pub bound: f64,
    pub within_bound: bool,
    /// Grid spacing exceeds the window, so the count is unreliable.
    pub resolution_warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GvScan {
    pub epsilon: f64,
    pub spacing: f64,
    pub lambda_range: (f64, f64),
    pub rows: Vec<GvScanRow>,
}

/// Grid estimates of `|{λ : |1 + G(λ; 0) V(n)| < |n|^{-d-ε}}|`.
///
/// A site passes when the estimate is at most the bound plus one grid
/// spacing.
pub fn one_plus_gv_scan(
    kernel: &GreenKernel,
    potential: &Potential,
    epsilon: f64,
    lambda_grid: &[f64],
    sites: &[Site],
) -> Result<GvScan> {
    if !(epsilon > 0.0) {
        return Err(LabError::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if lambda_grid.len() < 2 {
        return Err(LabError::Config("lambda grid needs two points".into()));
    }
    let spacing = lambda_grid[1] - lambda_grid[0];
    let uniform = lambda_grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - spacing).abs() <= 1e-9 * spacing.abs().max(1e-300));
    if !(spacing > 0.0) || !uniform {
        return Err(LabError::Config(
            "lambda grid must be increasing and uniformly spaced".into(),
        ));
    }
    let dim = kernel.dim();
    let top = kernel.spectrum_top();
    if lambda_grid
        .iter()
        .any(|&l| l > -epsilon && l < top + epsilon)
    {
        return Err(LabError::Config(format!(
            "lambda grid meets [-{epsilon}, {}]",
            top + epsilon
        )));
    }
    let origin = Site::origin(dim);
    let g0 = lambda_grid
        .iter()
        .map(|&l| kernel.eval_real(l, &origin))
        .collect::<Result<Vec<_>>>()?;
    let sup = potential.sup_norm();
    let mut rows = Vec::with_capacity(sites.len());
    for site in sites {
        if site.dim() != dim || site.is_origin() {
            return Err(LabError::Config(format!(
                "scan sites must be nonzero points of Z^{dim}, got {site}"
            )));
        }
        let v = potential.get(site);
        let window = site.norm().powf(-(dim as f64) - epsilon);
        let count = g0.iter().filter(|g| (1.0 + *g * v).abs() < window).count();
        let measure = count as f64 * spacing;
        let bound = sup * sup * window / epsilon;
        rows.push(GvScanRow {
            site: site.clone(),
            amplitude: v,
            window,
            measure,
            bound,
            within_bound: measure <= bound + spacing,
            resolution_warning: spacing > window,
        });
    }
    Ok(GvScan {
        epsilon,
        spacing,
        lambda_range: (lambda_grid[0], *lambda_grid.last().expect("two points")),
        rows,
    })
}
