//! Lattice Green's functions `G(z; n) = ((H0 - z)^{-1} δ_0)(n)`.
//!
//! The kernel is evaluated as the torus integral
//! `(2π)^{-d} ∫ e^{-i ξ·n} / (a(ξ) - z) dξ` with the uniform tensor trapezoid
//! rule. Off the spectrum `[0, 4d]` the integrand is analytic and periodic,
//! so the rule converges geometrically; the order is doubled until two
//! successive results agree.
//!
//! Because `a` is even in every coordinate, the phase `e^{-i ξ·n}` may be
//! replaced by `Π_j cos(ξ_j n_j)` and the grid folded onto `[0, π]^d` without
//! changing the discrete sum.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::fit_line;
use crate::lattice::Site;

/// Controls for quadrature accuracy and the near-spectrum guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenConfig {
    /// Relative agreement required between two successive orders.
    pub tolerance: f64,
    /// Smallest starting order (points per axis).
    pub min_order: usize,
    /// Largest order the doubling may reach.
    pub max_order: usize,
    /// Refuse spectral parameters closer than this to `[0, 4d]`.
    pub spectral_guard: f64,
}

impl GreenConfig {
    pub fn for_dim(dim: usize) -> Self {
        // Cap the tensor grid at about 2^24 points.
        let max_order = match dim {
            1 => 1 << 22,
            2 => 4096,
            3 => 256,
            4 => 64,
            _ => 16,
        };
        GreenConfig {
            tolerance: 1e-10,
            min_order: 16,
            max_order,
            spectral_guard: 1e-6,
        }
    }
}

type CacheKey = (u64, u64, usize, Site);

/// Evaluator of free-resolvent matrix elements in a fixed dimension.
///
/// Results are memoized per exact spectral parameter, starting order and
/// symmetry class of `n`; the cache never changes a returned value.
#[derive(Debug)]
pub struct GreenKernel {
    dim: usize,
    config: GreenConfig,
    cache: RwLock<HashMap<CacheKey, Complex64>>,
}

impl Clone for GreenKernel {
    fn clone(&self) -> Self {
        GreenKernel {
            dim: self.dim,
            config: self.config,
            cache: RwLock::new(self.cache.read().clone()),
        }
    }
}

/// Result of fitting `log |G(λ; k u)| ≈ log C - γ k |u|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub gamma: f64,
    pub c: f64,
    /// `1 - R^2` of the log-linear fit.
    pub residual: f64,
    pub rms: f64,
    pub points: usize,
}

impl GreenKernel {
    pub fn new(dim: usize) -> Self {
        Self::with_config(dim, GreenConfig::for_dim(dim))
    }

    pub fn with_config(dim: usize, config: GreenConfig) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        GreenKernel {
            dim,
            config,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &GreenConfig {
        &self.config
    }

    /// Upper end `4d` of the free spectrum.
    pub fn spectrum_top(&self) -> f64 {
        4.0 * self.dim as f64
    }

    /// Distance from `z` to the segment `[0, 4d]`.
    pub fn spectral_distance(&self, z: Complex64) -> f64 {
        let top = self.spectrum_top();
        let dx = if z.re < 0.0 {
            -z.re
        } else if z.re > top {
            z.re - top
        } else {
            0.0
        };
        dx.hypot(z.im)
    }

    /// Raw tensor trapezoid sum with `order` points per axis. No guard, no
    /// cache, no symmetry reduction of `n`.
    pub fn quadrature(&self, z: Complex64, n: &Site, order: usize) -> Complex64 {
        assert_eq!(n.dim(), self.dim, "site dimension");
        let order = order.max(2);
        let half = order / 2;
        let step = 2.0 * PI / order as f64;
        let cos_table: Vec<f64> = (0..order).map(|k| (step * k as f64).cos()).collect();

        // Folded per-axis tables of (symbol part, weighted phase).
        let axes: Vec<Vec<(f64, f64)>> = n
            .coords()
            .iter()
            .map(|&nj| {
                let m = nj.unsigned_abs() as usize % order;
                (0..=half)
                    .map(|k| {
                        let weight = if k == 0 || (order % 2 == 0 && k == half) {
                            1.0
                        } else {
                            2.0
                        };
                        let phase = cos_table[(k * m) % order];
                        (2.0 - 2.0 * cos_table[k], weight * phase)
                    })
                    .collect()
            })
            .collect();

        let sum = if z.im == 0.0 {
            Complex64::new(fold_real(&axes, 0, 0.0, 1.0, z.re), 0.0)
        } else {
            fold_complex(&axes, 0, 0.0, 1.0, z)
        };
        sum / (order as f64).powi(self.dim as i32)
    }

    fn check_spectral(&self, z: Complex64) -> Result<()> {
        let distance = self.spectral_distance(z);
        if !(distance >= self.config.spectral_guard) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(LabError::SpectralParameter {
                z,
                distance,
                upper: self.spectrum_top(),
            });
        }
        Ok(())
    }

    /// `G(z; n)`, doubling from the configured minimum order.
    pub fn eval(&self, z: Complex64, n: &Site) -> Result<Complex64> {
        self.eval_with_order(z, n, self.config.min_order)
    }

    /// `G(λ; n)` for real `λ` off the spectrum; the value is real there.
    pub fn eval_real(&self, lambda: f64, n: &Site) -> Result<f64> {
        Ok(self.eval(Complex64::new(lambda, 0.0), n)?.re)
    }

    /// `G(z; n)` by adaptive order doubling, starting at `order` points per
    /// axis (at least 8, and enough to keep aliased images of `n` away).
    pub fn eval_with_order(&self, z: Complex64, n: &Site, order: usize) -> Result<Complex64> {
        if n.dim() != self.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: n.dim(),
            });
        }
        self.check_spectral(z)?;
        let canonical = n.canonical();
        let key = (z.re.to_bits(), z.im.to_bits(), order, canonical);
        if let Some(v) = self.cache.read().get(&key) {
            return Ok(*v);
        }
        let value = self.adaptive(z, &key.3, order)?;
        self.cache.write().entry(key).or_insert(value);
        Ok(value)
    }

    fn adaptive(&self, z: Complex64, n: &Site, order: usize) -> Result<Complex64> {
        let alias_free = 2 * n.norm_inf() as usize + 32;
        let mut current_order = order.max(8).max(alias_free);
        if current_order > self.config.max_order {
            return Err(LabError::Accuracy {
                what: "Green quadrature (starting order above cap)",
                target: self.config.tolerance,
                achieved: f64::INFINITY,
            });
        }
        // |G| <= 1 / dist(z, spectrum) bounds the scale of absolute errors.
        let scale = 1.0 / self.spectral_distance(z);
        let mut previous = self.quadrature(z, n, current_order);
        loop {
            let next_order = current_order * 2;
            if next_order > self.config.max_order {
                let achieved = (self.quadrature(z, n, current_order / 2) - previous).norm();
                return Err(LabError::Accuracy {
                    what: "Green quadrature",
                    target: self.config.tolerance,
                    achieved: achieved / previous.norm().max(f64::MIN_POSITIVE),
                });
            }
            let next = self.quadrature(z, n, next_order);
            let diff = (next - previous).norm();
            if diff <= self.config.tolerance * next.norm() || diff <= 1e-15 * scale {
                return Ok(next);
            }
            previous = next;
            current_order = next_order;
        }
    }

    /// Least-squares exponential decay rate of `G(λ; k u)` for `k = 1..=n_max`.
    ///
    /// `λ` must lie outside `[-ε, 4d + ε]`. Points whose magnitude falls below
    /// `1e-13 |G(λ; 0)|` are discarded as numerical floor.
    pub fn decay_fit(
        &self,
        lambda: f64,
        direction: &Site,
        n_max: usize,
        epsilon: f64,
    ) -> Result<DecayFit> {
        if lambda >= -epsilon && lambda <= self.spectrum_top() + epsilon {
            return Err(LabError::SpectralParameter {
                z: Complex64::new(lambda, 0.0),
                distance: self.spectral_distance(Complex64::new(lambda, 0.0)),
                upper: self.spectrum_top(),
            });
        }
        if direction.is_origin() {
            return Err(LabError::Config("decay direction must be nonzero".into()));
        }
        let floor = 1e-13 * self.eval_real(lambda, &Site::origin(self.dim))?.abs();
        let mut xs = Vec::with_capacity(n_max);
        let mut ys = Vec::with_capacity(n_max);
        for k in 1..=n_max as i64 {
            let site = direction.scale(k);
            let g = self.eval_real(lambda, &site)?.abs();
            if g > floor {
                xs.push(site.norm());
                ys.push(g.ln());
            }
        }
        if xs.len() < 3 {
            return Err(LabError::InsufficientData(format!(
                "only {} Green values above the numerical floor",
                xs.len()
            )));
        }
        let fit = fit_line(&xs, &ys)?;
        Ok(DecayFit {
            gamma: -fit.slope,
            c: fit.intercept.exp(),
            residual: fit.unexplained,
            rms: fit.rms,
            points: fit.points,
        })
    }

    /// Amplitude bound `a = 1 / G(λ0; 0)` for `λ0 < 0`.
    pub fn coupling_bound_a(&self, lambda0: f64) -> Result<f64> {
        if !(lambda0 < 0.0) {
            return Err(LabError::Config(format!(
                "coupling bound needs lambda0 < 0, got {lambda0}"
            )));
        }
        Ok(1.0 / self.eval_real(lambda0, &Site::origin(self.dim))?)
    }
}

fn fold_real(axes: &[Vec<(f64, f64)>], axis: usize, a: f64, w: f64, lambda: f64) -> f64 {
    let table = &axes[axis];
    if axis + 1 == axes.len() {
        table
            .iter()
            .map(|&(s, p)| w * p / (a + s - lambda))
            .sum()
    } else {
        table
            .iter()
            .map(|&(s, p)| {
                if p == 0.0 {
                    0.0
                } else {
                    fold_real(axes, axis + 1, a + s, w * p, lambda)
                }
            })
            .sum()
    }
}

fn fold_complex(
    axes: &[Vec<(f64, f64)>],
    axis: usize,
    a: f64,
    w: f64,
    z: Complex64,
) -> Complex64 {
    let table = &axes[axis];
    if axis + 1 == axes.len() {
        table
            .iter()
            .map(|&(s, p)| w * p / (Complex64::new(a + s, 0.0) - z))
            .sum()
    } else {
        table
            .iter()
            .map(|&(s, p)| {
                if p == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    fold_complex(axes, axis + 1, a + s, w * p, z)
                }
            })
            .sum()
    }
}
