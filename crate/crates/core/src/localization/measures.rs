use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::hamlab::{stieltjes, BoxOperator};
use crate::lattice::{LatticeBox, LatticeField, Potential, Site};

#[derive(Debug, Clone, Serialize)]
pub struct BumpComparison {
    pub site: Site,
    pub amplitude: f64,
    /// Distance to the nearest other support site.
    pub separation: f64,
    /// `m_j(z)` for each `z`.
    pub local: Vec<Complex64>,
    /// `sup_z |m_j(z) - m_β(z)|`.
    pub sup_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpMeasureReport {
    pub beta: f64,
    pub z_list: Vec<Complex64>,
    pub local_radius: i64,
    /// `m_β(z)` of the single impurity.
    pub reference: Vec<Complex64>,
    pub rows: Vec<BumpComparison>,
}

impl BumpMeasureReport {
    /// Difference at the last far site.
    pub fn final_difference(&self) -> Option<f64> {
        self.rows.last().map(|r| r.sup_difference)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_difference < w[0].sup_difference)
    }
}

/// Stieltjes transforms of `χ_{n_j}` for `H` seen from far bumps `n_j`,
/// against the single impurity `-Δ + β P0`.
///
/// Each comparison uses the Dirichlet box of radius `local_radius` centred
/// at `n_j`, which must lie inside the ℓ∞ ball of radius `global_radius`
/// where the potential is defined.
pub fn bump_measure_compare(
    potential: &Potential,
    far_sites: &[Site],
    beta: f64,
    z_list: &[Complex64],
    local_radius: i64,
    global_radius: i64,
) -> Result<BumpMeasureReport> {
    let dim = potential.dim();
    if z_list.is_empty() || z_list.iter().any(|z| !(z.im > 0.0)) {
        return Err(LabError::Config(
            "comparison points must lie in the upper half-plane".into(),
        ));
    }
    let lattice = LatticeBox::dirichlet(dim, local_radius)?;
    let origin = Site::origin(dim);
    let phi = LatticeField::delta(lattice, &origin)?;
    let reference_op = BoxOperator::new(lattice, Potential::single_bump(dim, beta)?)?;
    let reference = z_list
        .iter()
        .map(|&z| stieltjes(&reference_op, &phi, z))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(far_sites.len());
    for site in far_sites {
        if site.dim() != dim {
            return Err(LabError::DimensionMismatch {
                expected: dim,
                got: site.dim(),
            });
        }
        let amplitude = potential.get(site);
        if amplitude == 0.0 {
            return Err(LabError::Config(format!("far site {site} is not in the support")));
        }
        if site.norm_inf() + local_radius > global_radius {
            return Err(LabError::Geometry(format!(
                "box of radius {local_radius} around {site} leaves the global box of radius {global_radius}"
            )));
        }
        let local_potential = potential.restricted(global_radius).translated(site);
        let op = BoxOperator::new(lattice, local_potential)?;
        let local = z_list
            .iter()
            .map(|&z| stieltjes(&op, &phi, z))
            .collect::<Result<Vec<_>>>()?;
        let sup_difference = local
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        rows.push(BumpComparison {
            site: site.clone(),
            amplitude,
            separation: potential.separation(site).unwrap_or(f64::INFINITY),
            local,
            sup_difference,
        });
    }
    Ok(BumpMeasureReport {
        beta,
        z_list: z_list.to_vec(),
        local_radius,
        reference,
        rows,
    })
}
