//! Hypothesis checks run by `validate`; nothing here solves the experiment.

use std::fmt;

use latspec_core::lattice::{sparse_support, sparseness_profile, thm1_condition_partial_sums};
use latspec_core::{GreenKernel, Potential};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Flagged,
    Warning,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Flagged => "FLAGGED",
            Status::Warning => "WARNING",
            Status::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

fn dyadic_radii(max: f64) -> Vec<f64> {
    let mut radii = vec![1.0];
    while *radii.last().unwrap() < max {
        radii.push(2.0 * radii.last().unwrap());
    }
    radii
}

/// Dyadic shell contributions to `Σ |V(n)| / |n|^((d-1)/2)` must die out:
/// the outermost occupied shell may carry at most half the largest one.
pub fn summability(potential: &Potential, extent: f64) -> Check {
    let name = "scattering summability";
    let radii = dyadic_radii(extent);
    let partial = thm1_condition_partial_sums(potential, &radii);
    let shells: Vec<f64> = partial
        .iter()
        .scan(0.0, |prev, &s| {
            let shell = s - *prev;
            *prev = s;
            Some(shell)
        })
        .filter(|&s| s > 0.0)
        .collect();
    if shells.len() < 3 {
        return Check {
            name,
            status: Status::Skipped,
            detail: format!("only {} occupied dyadic shells", shells.len()),
        };
    }
    let max = shells.iter().copied().fold(0.0, f64::max);
    let last = *shells.last().unwrap();
    let status = if last <= 0.5 * max {
        Status::Pass
    } else {
        Status::Flagged
    };
    Check {
        name,
        status,
        detail: format!(
            "partial sum {:.4} at radius {}; outer shell {last:.4} vs largest {max:.4}",
            partial.last().unwrap(),
            radii.last().unwrap()
        ),
    }
}

/// Shell minima of `d(n) / |n|^δ` must not decrease outward. The innermost
/// occupied shell is ignored: its separations are set by the lattice scale,
/// not by the sparseness rule.
pub fn sparseness(potential: &Potential, delta: f64, extent: f64) -> Check {
    let name = "sparseness ratio";
    let profile: Vec<f64> = sparseness_profile(potential, delta, &dyadic_radii(extent))
        .into_iter()
        .flatten()
        .skip(1)
        .collect();
    if profile.len() < 2 {
        return Check {
            name,
            status: Status::Skipped,
            detail: format!("only {} occupied dyadic shells", profile.len()),
        };
    }
    let increasing = profile.windows(2).all(|w| w[1] >= w[0]);
    Check {
        name,
        status: if increasing { Status::Pass } else { Status::Flagged },
        detail: format!(
            "min d(n)/|n|^{delta} per shell: {}",
            profile
                .iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

pub fn hypothesis_checks(config: &ExperimentConfig) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let dim = config.dimension as f64;
    if let (Some(p), Some(v)) = (&config.potential, config.potential()?) {
        let extent = p.radius as f64 * dim.sqrt();
        if config.experiment == ExperimentKind::WaveProbe {
            checks.push(summability(&v, extent));
        }
        if let Some(delta) = p.delta {
            checks.push(sparseness(&v, delta, extent));
        }
    }
    if let Some(s) = &config.spectrum_fill {
        let kernel = GreenKernel::with_config(config.dimension, config.green_config());
        let bound = kernel.coupling_bound_a(s.lambda0)?;
        let support = sparse_support(config.dimension, &s.rule, s.radius)?;
        let v = support.constant_potential(config.dimension, -s.a.unwrap_or(bound))?;
        if let Some(delta) = s.delta {
            checks.push(sparseness(&v, delta, s.radius as f64 * dim.sqrt()));
        }
        checks.push(match s.a {
            Some(a) if a > bound => Check {
                name: "coupling bound",
                status: Status::Warning,
                detail: format!(
                    "a = {a} exceeds 1/G(λ0; 0) = {bound:.10}; levels below λ0 are expected"
                ),
            },
            _ => Check {
                name: "coupling bound",
                status: Status::Pass,
                detail: format!("a = {:.10} ≤ 1/G(λ0; 0) = {bound:.10}", s.a.unwrap_or(bound)),
            },
        });
    }
    Ok(checks)
}
