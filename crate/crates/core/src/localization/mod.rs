//! The resolvent machinery on the support of a sparse potential: `α(n)`,
//! the kernel `T`, square-summability of `(H - λ)^{-1} χ_j`, impurity
//! levels, Borel-Cantelli set measures, bump-measure convergence and
//! spectrum filling for random amplitudes.

mod fill;
mod kernel;
mod levels;
mod measures;
mod resolve;

pub use fill::{spectrum_fill_scan, FillConfig, FillReport, RealizationSummary, LAMBDA0_SLACK};
pub use kernel::{alpha_coeff, build_t, SchurBounds, SupportIndex, TKernel, RESONANCE_THRESHOLD};
pub use levels::{impurity_level, one_plus_gv_scan, GvScan, GvScanRow};
pub use measures::{bump_measure_compare, BumpComparison, BumpMeasureReport};
pub use resolve::{
    eigenvalue_candidates, reconstruct, simon_wolff_resolve, solve_on_support, EigenCandidate,
    ResolveReport, ResolveRow, ResolveThresholds, SupportSolution, Verdict,
};
