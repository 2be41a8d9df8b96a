//! Time evolution under `H0` and `H`, wave-operator convergence probes, and
//! the d = 2 stationary-phase integrals behind the trace-class estimate.

mod probe;
mod propagate;
mod qintegral;

pub use probe::{wave_operator_probe, ProbeOptions, ProbeSample, WaveProbe};
pub use propagate::{
    free_propagate, full_propagate, full_propagate_with, PropagatorSpec, DEFAULT_MAX_TERMS,
};
pub use qintegral::{
    q_decay_fit, q_decay_fit_with, q_integral, BumpProfile, QDecayFit, QIntegralSpec,
    MIN_DECAY_SPAN,
};
