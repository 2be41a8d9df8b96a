use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{build_t, SupportIndex};
use crate::error::{LabError, Result};
use crate::green::GreenKernel;
use crate::lattice::{LatticeBox, Potential, Site};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolveThresholds {
    /// Smallest singular value below which `λ` is an eigenvalue candidate.
    pub near_eigenvalue: f64,
    /// Relative change of `‖ψ‖` between successive radii counted as settled.
    pub summable: f64,
}

impl Default for ResolveThresholds {
    fn default() -> Self {
        ResolveThresholds {
            near_eigenvalue: 1e-6,
            summable: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Summable,
    NearEigenvalue,
    /// Neither threshold met at the radii examined.
    Unsettled,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolveRow {
    pub radius: i64,
    pub support_size: usize,
    /// Smallest singular value of `M = I + G_S V`, the support block of
    /// `I + G0 V`. `M = diag(α)^{-1} (I + T)`, so it vanishes exactly when
    /// `I + T` is singular and stays defined when some `α(n)` blows up.
    pub sigma_min: f64,
    /// Smallest singular value of `I + T`, when every `α(n)` is finite.
    pub sigma_min_t: Option<f64>,
    /// `‖ψ‖` over the box of this radius; absent if `M` is singular.
    pub psi_norm: Option<f64>,
    /// `Σ |ψ(n)|^2` over support sites outside the previous radius.
    pub tail: Option<f64>,
    /// `|‖ψ‖_R - ‖ψ‖_{R_prev}| / ‖ψ‖_R`.
    pub relative_change: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolveReport {
    pub lambda: f64,
    pub j: Site,
    pub rows: Vec<ResolveRow>,
    pub verdict: Verdict,
}

/// Values of `ψ = (H - λ)^{-1} χ_j` on the support inside the ℓ∞ ball of
/// radius `radius`, from `(I + T) ψ = ψ̃0`. Solved in the form
/// `M ψ = ψ0` with `M = I + G_S V`, which is the same system with the rows
/// scaled by `α(n)^{-1}`.
pub struct SupportSolution {
    pub support: SupportIndex,
    pub psi: Vec<f64>,
    pub sigma_min: f64,
}

fn support_matrix(
    kernel: &GreenKernel,
    lambda: f64,
    potential: &Potential,
    support: &SupportIndex,
) -> Result<DMatrix<f64>> {
    let sites = support.sites();
    let m = sites.len();
    let mut matrix = DMatrix::identity(m, m);
    for i in 0..m {
        for k in 0..m {
            let g = kernel.eval_real(lambda, &sites[i].sub(&sites[k]))?;
            matrix[(i, k)] += g * potential.get(&sites[k]);
        }
    }
    Ok(matrix)
}

fn sigma_min(matrix: &DMatrix<f64>) -> f64 {
    if matrix.is_empty() {
        return f64::INFINITY;
    }
    matrix.clone().svd(false, false).singular_values.min()
}

pub fn solve_on_support(
    kernel: &GreenKernel,
    lambda: f64,
    j: &Site,
    potential: &Potential,
    radius: i64,
) -> Result<SupportSolution> {
    let support = SupportIndex::new(potential, radius);
    let matrix = support_matrix(kernel, lambda, potential, &support)?;
    let smin = sigma_min(&matrix);
    let rhs = support
        .sites()
        .iter()
        .map(|n| kernel.eval_real(lambda, &n.sub(j)))
        .collect::<Result<Vec<_>>>()?;
    let psi = if support.is_empty() {
        Vec::new()
    } else {
        matrix
            .lu()
            .solve(&DVector::from_vec(rhs))
            .ok_or_else(|| LabError::Breakdown("I + T is singular".into()))?
            .iter()
            .copied()
            .collect()
    };
    Ok(SupportSolution {
        support,
        psi,
        sigma_min: smin,
    })
}

/// `ψ(m) = G(λ; m - j) - Σ_l G(λ; m - l) V(l) ψ(l)` over a box.
pub fn reconstruct(
    kernel: &GreenKernel,
    lambda: f64,
    j: &Site,
    potential: &Potential,
    solution: &SupportSolution,
    lattice: &LatticeBox,
) -> Result<Vec<f64>> {
    let sites = solution.support.sites();
    lattice
        .sites()
        .map(|m| {
            let mut value = kernel.eval_real(lambda, &m.sub(j))?;
            for (l, psi) in sites.iter().zip(&solution.psi) {
                value -= kernel.eval_real(lambda, &m.sub(l))? * potential.get(l) * psi;
            }
            Ok(value)
        })
        .collect()
}

/// Square-summability of `(H - λ)^{-1} χ_j` along growing boxes, through the
/// kernel equation on the support of `V`.
pub fn simon_wolff_resolve(
    kernel: &GreenKernel,
    lambda: f64,
    j: &Site,
    potential: &Potential,
    radii: &[i64],
    thresholds: &ResolveThresholds,
) -> Result<ResolveReport> {
    let dim = kernel.dim();
    if j.dim() != dim {
        return Err(LabError::DimensionMismatch {
            expected: dim,
            got: j.dim(),
        });
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0 {
        return Err(LabError::Config(
            "radii must be nonnegative and strictly increasing".into(),
        ));
    }
    let mut rows: Vec<ResolveRow> = Vec::with_capacity(radii.len());
    for (idx, &radius) in radii.iter().enumerate() {
        let previous_radius = if idx == 0 { radius / 2 } else { radii[idx - 1] };
        let solution = solve_on_support(kernel, lambda, j, potential, radius);
        let solution = match solution {
            Ok(s) => Some(s),
            Err(LabError::Breakdown(_)) => None,
            Err(e) => return Err(e),
        };
        let support = SupportIndex::new(potential, radius);
        let smin = match &solution {
            Some(s) => s.sigma_min,
            None => 0.0,
        };
        let sigma_min_t = match build_t(kernel, lambda, potential, &support) {
            Ok(t) => {
                let m = t.len();
                Some(sigma_min(&(DMatrix::identity(m, m) + &t.matrix)))
            }
            Err(LabError::Resonance { .. }) => None,
            Err(e) => return Err(e),
        };
        let near = smin < thresholds.near_eigenvalue;
        let (psi_norm, tail) = match (&solution, near) {
            (Some(s), false) => {
                let lattice = LatticeBox::dirichlet(dim, radius)?;
                let psi = reconstruct(kernel, lambda, j, potential, s, &lattice)?;
                let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
                let tail = s
                    .support
                    .sites()
                    .iter()
                    .zip(&s.psi)
                    .filter(|(n, _)| n.norm_inf() > previous_radius)
                    .map(|(_, v)| v * v)
                    .sum::<f64>();
                (Some(norm), Some(tail))
            }
            _ => (None, None),
        };
        let relative_change = match (psi_norm, rows.last().and_then(|r| r.psi_norm)) {
            (Some(now), Some(before)) => Some((now - before).abs() / now),
            _ => None,
        };
        let verdict = if near {
            Verdict::NearEigenvalue
        } else if relative_change.is_some_and(|c| c < thresholds.summable) {
            Verdict::Summable
        } else {
            Verdict::Unsettled
        };
        rows.push(ResolveRow {
            radius,
            support_size: support.len(),
            sigma_min: smin,
            sigma_min_t,
            psi_norm,
            tail,
            relative_change,
            verdict,
        });
    }
    let verdict = rows.last().map(|r| r.verdict).unwrap_or(Verdict::Unsettled);
    Ok(ResolveReport {
        lambda,
        j: j.clone(),
        rows,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCandidate {
    pub lambda: f64,
    pub sigma_min: f64,
}

/// Local minima of `σ_min(I + G_S V)` over a grid in `λ`, refined by
/// golden-section search and kept when below `threshold`.
pub fn eigenvalue_candidates(
    kernel: &GreenKernel,
    potential: &Potential,
    radius: i64,
    grid: &[f64],
    threshold: f64,
) -> Result<Vec<EigenCandidate>> {
    if grid.len() < 3 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Config(
            "candidate scan needs an increasing grid of at least 3 points".into(),
        ));
    }
    let support = SupportIndex::new(potential, radius);
    let sigma = |lambda: f64| -> Result<f64> {
        Ok(sigma_min(&support_matrix(kernel, lambda, potential, &support)?))
    };
    let values = grid.iter().map(|&l| sigma(l)).collect::<Result<Vec<_>>>()?;
    let mut found = Vec::new();
    for i in 0..grid.len() {
        let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
        let right = values.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if values[i] > left || values[i] > right {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let (lambda, value) = golden_section(&sigma, lo, hi, 1e-12)?;
        if value < threshold && !found.iter().any(|c: &EigenCandidate| (c.lambda - lambda).abs() < 1e-9) {
            found.push(EigenCandidate {
                lambda,
                sigma_min: value,
            });
        }
    }
    Ok(found)
}

fn golden_section(
    f: &impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamlab::{eigs_in_window, BoxOperator};

    #[test]
    fn free_resolvent_without_potential() {
        let kernel = GreenKernel::new(1);
        let j = Site::from([0]);
        let report = simon_wolff_resolve(
            &kernel,
            -1.0,
            &j,
            &Potential::zero(1),
            &[20, 40, 80],
            &ResolveThresholds::default(),
        )
        .unwrap();
        // Σ_n r^{2|n|} / 5 = (1 + r^2) / (5 (1 - r^2)).
        let r = (3.0 - 5f64.sqrt()) / 2.0;
        let exact = ((1.0 + r * r) / (5.0 * (1.0 - r * r))).sqrt();
        for row in &report.rows {
            assert!((row.psi_norm.unwrap() - exact).abs() < 1e-10);
            assert_eq!(row.support_size, 0);
        }
        assert_eq!(report.verdict, Verdict::Summable);
    }

    #[test]
    fn exact_impurity_level_is_flagged() {
        let kernel = GreenKernel::new(1);
        let v = Potential::single_bump(1, -5f64.sqrt()).unwrap();
        let report = simon_wolff_resolve(
            &kernel,
            -1.0,
            &Site::from([0]),
            &v,
            &[1, 10, 100],
            &ResolveThresholds::default(),
        )
        .unwrap();
        for row in &report.rows {
            assert!(row.sigma_min < 1e-9);
            assert!(row.sigma_min_t.is_none());
            assert_eq!(row.verdict, Verdict::NearEigenvalue);
        }
        assert_eq!(report.verdict, Verdict::NearEigenvalue);
    }

    #[test]
    fn agrees_with_the_box_resolvent() {
        let v = Potential::from_entries(
            1,
            [
                (Site::from([-3]), -1.2),
                (Site::from([0]), 0.8),
                (Site::from([2]), -2.0),
                (Site::from([6]), -0.4),
            ],
        )
        .unwrap();
        let kernel = GreenKernel::new(1);
        let lambda = -0.3;
        let j = Site::from([1]);
        let solution = solve_on_support(&kernel, lambda, &j, &v, 10).unwrap();
        let lattice = LatticeBox::dirichlet(1, 80).unwrap();
        let op = BoxOperator::new(lattice, v.clone()).unwrap();
        let mut a = op.to_dense();
        for i in 0..lattice.len() {
            a[(i, i)] -= lambda;
        }
        let mut e = DVector::zeros(lattice.len());
        e[lattice.index_of(&j).unwrap()] = 1.0;
        let direct = a.lu().solve(&e).unwrap();
        for (n, psi) in solution.support.sites().iter().zip(&solution.psi) {
            assert!((direct[lattice.index_of(n).unwrap()] - psi).abs() < 1e-10);
        }
        let full = reconstruct(&kernel, lambda, &j, &v, &solution, &LatticeBox::dirichlet(1, 10).unwrap())
            .unwrap();
        let small = LatticeBox::dirichlet(1, 10).unwrap();
        for (i, m) in small.sites().enumerate() {
            assert!((direct[lattice.index_of(&m).unwrap()] - full[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn candidates_match_box_eigenvalues() {
        let v = Potential::from_entries(
            2,
            [
                (Site::from([0, 0]), -2.5),
                (Site::from([2, 1]), -3.0),
                (Site::from([-1, 3]), -1.5),
            ],
        )
        .unwrap();
        let kernel = GreenKernel::new(2);
        let grid: Vec<f64> = (0..120).map(|i| -3.5 + 3.4 * i as f64 / 119.0).collect();
        let candidates = eigenvalue_candidates(&kernel, &v, 5, &grid, 1e-6).unwrap();
        let op = BoxOperator::new(LatticeBox::dirichlet(2, 30).unwrap(), v).unwrap();
        let eigs = eigs_in_window(&op, -3.5, -0.1, 10).unwrap();
        assert_eq!(candidates.len(), eigs.pairs.len());
        assert!(!candidates.is_empty());
        for (c, e) in candidates.iter().zip(eigs.values()) {
            assert!((c.lambda - e).abs() < 1e-4, "{c:?} vs {e}");
        }
    }

    #[test]
    fn rejects_bad_radii() {
        let kernel = GreenKernel::new(1);
        let t = ResolveThresholds::default();
        let v = Potential::zero(1);
        let j = Site::from([0]);
        assert!(simon_wolff_resolve(&kernel, -1.0, &j, &v, &[], &t).is_err());
        assert!(simon_wolff_resolve(&kernel, -1.0, &j, &v, &[5, 5], &t).is_err());
        assert!(simon_wolff_resolve(&kernel, -1.0, &Site::from([0, 0]), &v, &[5], &t).is_err());
    }
}
