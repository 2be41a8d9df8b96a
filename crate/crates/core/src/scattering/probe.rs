use rayon::prelude::*;
use serde::Serialize;

use super::propagate::{free_propagate, full_propagate_with, PropagatorSpec};
use crate::error::{LabError, Result};
use crate::hamlab::BoxOperator;
use crate::lattice::{LatticeField, Potential};

/// Amplitudes below this fraction of the peak do not count towards the
/// initial extent of the probe state.
const EXTENT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOptions {
    /// Sites kept free between the worst-case wavefront and the boundary.
    pub margin: i64,
    pub keep_states: bool,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            margin: 4,
            keep_states: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSample {
    pub t: f64,
    /// `‖W(t) f‖`.
    pub norm: f64,
    /// `‖W(t) f - W(t_prev) f‖`; absent for the first time.
    pub increment: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct WaveProbe {
    pub samples: Vec<ProbeSample>,
    /// `W(t) f` per sample when requested.
    pub states: Option<Vec<LatticeField>>,
    /// ℓ∞ radius of the initial state.
    pub initial_extent: i64,
    /// Time at which the fastest free front (speed 2 per axis) has reached
    /// every support site it can reach within the grid.
    pub transient_end: f64,
    pub tolerance: f64,
}

impl WaveProbe {
    pub fn increments(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.increment).collect()
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0, |m, s| f64::max(m, (s.norm - 1.0).abs()))
    }

    /// Increments whose left endpoint is at or after the transient, in order.
    pub fn settled_increments(&self) -> Vec<f64> {
        self.samples
            .windows(2)
            .filter(|w| w[0].t >= self.transient_end)
            .filter_map(|w| w[1].increment)
            .collect()
    }

    /// Settled increments never grow, and the last one is below `ratio`
    /// times the first increment of the whole grid.
    pub fn converges(&self, ratio: f64) -> bool {
        let all = self.increments();
        let settled = self.settled_increments();
        match (all.first(), settled.last()) {
            (Some(&first), Some(&last)) => {
                settled.windows(2).all(|w| w[1] <= w[0]) && last < ratio * first
            }
            _ => false,
        }
    }
}

/// Cauchy increments of `W(t) f = e^{-itH} e^{itH0} f` along a time grid.
///
/// The box is periodic, so the grid is refused unless
/// `extent(f) + 2d·t_max + margin <= R`: beyond that the free evolution
/// wraps around and the finite box no longer imitates Z^d.
pub fn wave_operator_probe(
    potential: &Potential,
    f: &LatticeField,
    spec: &PropagatorSpec,
    options: &ProbeOptions,
) -> Result<WaveProbe> {
    let lattice = *spec.lattice();
    if f.lattice() != &lattice {
        return Err(LabError::ShapeMismatch);
    }
    if (f.norm() - 1.0).abs() > 1e-10 {
        return Err(LabError::Config(format!(
            "probe state must have unit norm, got {}",
            f.norm()
        )));
    }
    let dim = lattice.dim() as f64;
    let extent = initial_extent(f);
    let t_max = *spec.times().last().expect("validated non-empty");
    let required = extent as f64 + 2.0 * dim * t_max + options.margin as f64;
    if required > lattice.radius() as f64 {
        return Err(LabError::Wavefront {
            required,
            available: lattice.radius(),
        });
    }

    let reach = extent as f64 + 2.0 * t_max;
    let transient_end = potential
        .support()
        .map(|s| s.norm_inf() as f64)
        .filter(|&r| r <= reach)
        .map(|r| 0.5 * (r + extent as f64))
        .fold(0.0, f64::max);

    let op = BoxOperator::new(lattice, potential.restricted(lattice.radius()))?;
    let tol = spec.tolerance();
    let states: Vec<LatticeField> = spec
        .times()
        .par_iter()
        .map(|&t| {
            let free = free_propagate(f, t)?;
            full_propagate_with(&op, &free, t, tol, spec.max_terms())
        })
        .collect::<Result<_>>()?;

    let mut samples = Vec::with_capacity(states.len());
    for (k, state) in states.iter().enumerate() {
        let increment = if k == 0 {
            None
        } else {
            Some(state.distance(&states[k - 1])?)
        };
        samples.push(ProbeSample {
            t: spec.times()[k],
            norm: state.norm(),
            increment,
        });
    }
    Ok(WaveProbe {
        samples,
        states: options.keep_states.then_some(states),
        initial_extent: extent,
        transient_end,
        tolerance: tol,
    })
}

fn initial_extent(f: &LatticeField) -> i64 {
    let peak = f.values().iter().fold(0.0, |m: f64, v| m.max(v.norm()));
    let lattice = f.lattice();
    f.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > EXTENT_THRESHOLD * peak)
        .map(|(i, _)| lattice.site_at(i).norm_inf())
        .max()
        .unwrap_or(0)
}
