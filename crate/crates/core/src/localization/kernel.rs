use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::green::GreenKernel;
use crate::lattice::{Potential, Site};

/// Denominators `|1 + G(λ; 0) V(n)|` below this are resonances.
pub const RESONANCE_THRESHOLD: f64 = 1e-12;

/// `α(n) = (1 + G(λ; 0) V(n))^{-1}`.
pub fn alpha_coeff(kernel: &GreenKernel, lambda: f64, n: &Site, potential: &Potential) -> Result<f64> {
    let g0 = kernel.eval_real(lambda, &Site::origin(kernel.dim()))?;
    alpha_from(g0, n, potential.get(n))
}

fn alpha_from(g0: f64, site: &Site, v: f64) -> Result<f64> {
    let denominator = 1.0 + g0 * v;
    if denominator.abs() < RESONANCE_THRESHOLD {
        return Err(LabError::Resonance {
            site: site.clone(),
            denominator,
        });
    }
    Ok(1.0 / denominator)
}

/// The support of a potential inside an ℓ∞ ball, in site order.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportIndex {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl SupportIndex {
    pub fn new(potential: &Potential, radius: i64) -> Self {
        Self::from_sites(
            potential
                .support()
                .filter(|s| s.norm_inf() <= radius)
                .cloned()
                .collect(),
        )
    }

    pub fn full(potential: &Potential) -> Self {
        Self::from_sites(potential.support().cloned().collect())
    }

    fn from_sites(sites: Vec<Site>) -> Self {
        let index = sites.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        SupportIndex { sites, index }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn position(&self, site: &Site) -> Option<usize> {
        self.index.get(site).copied()
    }
}

/// `T(n, l) = α(n) G(λ; n - l) V(l)` for `l != n` on the support; real since
/// `λ` is real and below or above the spectrum.
#[derive(Debug, Clone)]
pub struct TKernel {
    pub lambda: f64,
    pub support: SupportIndex,
    pub alpha: Vec<f64>,
    pub values: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

/// Two upper bounds on `‖T‖₂` by the Schur test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchurBounds {
    /// `sqrt(max row sum · max column sum)` of `|T|`.
    pub direct: f64,
    /// The same for the envelope `|α(n)| C e^{-γ|n-l|} |V(l)|`.
    pub envelope: f64,
    pub gamma: f64,
    pub c: f64,
}

impl TKernel {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn norm(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.matrix.clone().svd(false, false).singular_values.max()
    }

    /// Schur bounds. The envelope uses the exponential decay rate fitted
    /// along a lattice axis and the smallest `C` with
    /// `|G(λ; δ)| <= C e^{-γ|δ|}` over the differences present.
    pub fn schur_bounds(&self, kernel: &GreenKernel) -> Result<SchurBounds> {
        let m = self.len();
        let direct = schur(m, |i, k| self.matrix[(i, k)].abs());
        let dim = kernel.dim();
        let fit = kernel.decay_fit(self.lambda, &Site::unit(dim, 0), 12, 0.0)?;
        let gamma = fit.gamma;
        let sites = self.support.sites();
        let mut c = 0.0f64;
        for i in 0..m {
            for k in 0..m {
                if i != k {
                    let delta = sites[i].sub(&sites[k]);
                    let g = kernel.eval_real(self.lambda, &delta)?.abs();
                    c = c.max(g * (gamma * delta.norm()).exp());
                }
            }
        }
        let envelope = schur(m, |i, k| {
            if i == k {
                0.0
            } else {
                self.alpha[i].abs()
                    * c
                    * (-gamma * sites[i].dist(&sites[k])).exp()
                    * self.values[k].abs()
            }
        });
        Ok(SchurBounds {
            direct,
            envelope,
            gamma,
            c,
        })
    }
}

fn schur(m: usize, entry: impl Fn(usize, usize) -> f64) -> f64 {
    let mut rows = vec![0.0f64; m];
    let mut cols = vec![0.0f64; m];
    for i in 0..m {
        for k in 0..m {
            let e = entry(i, k);
            rows[i] += e;
            cols[k] += e;
        }
    }
    let r = rows.iter().fold(0.0f64, |a, &b| a.max(b));
    let c = cols.iter().fold(0.0f64, |a, &b| a.max(b));
    (r * c).sqrt()
}

pub fn build_t(
    kernel: &GreenKernel,
    lambda: f64,
    potential: &Potential,
    support: &SupportIndex,
) -> Result<TKernel> {
    let dim = kernel.dim();
    if potential.dim() != dim {
        return Err(LabError::DimensionMismatch {
            expected: dim,
            got: potential.dim(),
        });
    }
    let g0 = kernel.eval_real(lambda, &Site::origin(dim))?;
    let sites = support.sites();
    let values: Vec<f64> = sites.iter().map(|s| potential.get(s)).collect();
    if let Some(i) = values.iter().position(|v| *v == 0.0) {
        return Err(LabError::Config(format!(
            "site {} is not in the support of the potential",
            sites[i]
        )));
    }
    let alpha = sites
        .iter()
        .zip(&values)
        .map(|(s, &v)| alpha_from(g0, s, v))
        .collect::<Result<Vec<_>>>()?;
    let m = sites.len();
    let mut matrix = DMatrix::zeros(m, m);
    for i in 0..m {
        for k in 0..m {
            if i != k {
                let g = kernel.eval_real(lambda, &sites[i].sub(&sites[k]))?;
                matrix[(i, k)] = alpha[i] * g * values[k];
            }
        }
    }
    Ok(TKernel {
        lambda,
        support: support.clone(),
        alpha,
        values,
        matrix,
    })
}
