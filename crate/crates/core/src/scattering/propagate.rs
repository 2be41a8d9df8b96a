use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};
use crate::hamlab::BoxOperator;
use crate::lattice::{Boundary, LatticeBox, LatticeField};

/// Default cap on the Chebyshev expansion length.
pub const DEFAULT_MAX_TERMS: usize = 200_000;

/// Time grid and accuracy for a family of propagations on one periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSpec {
    lattice: LatticeBox,
    times: Vec<f64>,
    tolerance: f64,
    max_terms: usize,
}

impl PropagatorSpec {
    pub fn new(lattice: LatticeBox, times: Vec<f64>, tolerance: f64) -> Result<Self> {
        if lattice.boundary() != Boundary::Periodic {
            return Err(LabError::Config(
                "propagation requires a periodic box".into(),
            ));
        }
        if times.is_empty() {
            return Err(LabError::Config("empty time grid".into()));
        }
        if !times.iter().all(|t| t.is_finite() && *t > 0.0) {
            return Err(LabError::Config("times must be positive and finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Config("times must be strictly increasing".into()));
        }
        if !(tolerance > 0.0 && tolerance <= 1e-4) {
            return Err(LabError::Config(format!(
                "chebyshev tolerance {tolerance} outside (0, 1e-4]"
            )));
        }
        Ok(PropagatorSpec {
            lattice,
            times,
            tolerance,
            max_terms: DEFAULT_MAX_TERMS,
        })
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms.max(1);
        self
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

/// `e^{itH0} f` on a periodic box, exactly through the discrete Fourier
/// transform.
pub fn free_propagate(f: &LatticeField, t: f64) -> Result<LatticeField> {
    let lattice = *f.lattice();
    if lattice.boundary() != Boundary::Periodic {
        return Err(LabError::Unsupported(
            "free propagation is diagonal only on periodic boxes".into(),
        ));
    }
    let side = lattice.side();
    let dim = lattice.dim();
    let mut values = f.values().to_vec();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(side);
    let inverse = planner.plan_fft_inverse(side);

    transform_axes(&mut values, &lattice, forward.as_ref());
    let phase: Vec<Complex64> = (0..side)
        .map(|k| {
            let a = 2.0 - 2.0 * (2.0 * PI * k as f64 / side as f64).cos();
            Complex64::from_polar(1.0, t * a)
        })
        .collect();
    // a(ξ) is a sum over axes, so the multiplier factorizes.
    for (idx, v) in values.iter_mut().enumerate() {
        let mut rest = idx;
        for _ in 0..dim {
            *v *= phase[rest % side];
            rest /= side;
        }
    }
    transform_axes(&mut values, &lattice, inverse.as_ref());
    let norm = 1.0 / (side as f64).powi(dim as i32);
    for v in values.iter_mut() {
        *v *= norm;
    }
    LatticeField::from_values(lattice, values)
}

fn transform_axes(values: &mut [Complex64], lattice: &LatticeBox, fft: &dyn Fft<f64>) {
    let side = lattice.side();
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..lattice.dim() {
        let stride = lattice.stride(axis);
        for start in 0..values.len() {
            if lattice.axis_position(start, axis) != 0 {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = values[start + k * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (k, v) in line.iter().enumerate() {
                values[start + k * stride] = *v;
            }
        }
    }
}

/// `e^{-itH} f` by a Chebyshev expansion on the interval enclosing the
/// spectrum of `H`.
pub fn full_propagate(op: &BoxOperator, f: &LatticeField, t: f64, tol: f64) -> Result<LatticeField> {
    full_propagate_with(op, f, t, tol, DEFAULT_MAX_TERMS)
}

pub fn full_propagate_with(
    op: &BoxOperator,
    f: &LatticeField,
    t: f64,
    tol: f64,
    max_terms: usize,
) -> Result<LatticeField> {
    if f.lattice() != op.lattice() {
        return Err(LabError::ShapeMismatch);
    }
    if !(tol > 0.0 && tol < 1.0) || !t.is_finite() {
        return Err(LabError::Config(format!(
            "invalid propagation request t={t}, tol={tol}"
        )));
    }
    let (lo, hi) = op.spectral_bounds();
    let pad = 1e-12 * (hi - lo).max(1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    let centre = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    let x = t * half;

    let bessel = bessel_j_sequence(x.abs(), tol * 1e-2, max_terms).ok_or(
        LabError::NonConvergence {
            what: "chebyshev expansion length",
            iterations: max_terms,
            residual: x.abs(),
        },
    )?;
    let coeffs: Vec<Complex64> = bessel
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            // J_k(-x) = (-1)^k J_k(x); (-i)^k from the Jacobi-Anger expansion.
            let j = if x < 0.0 && k % 2 == 1 { -j } else { j };
            let weight = if k == 0 { 1.0 } else { 2.0 };
            weight * j * minus_i_pow(k)
        })
        .collect();

    let n = f.values().len();
    let apply_scaled = |src: &[Complex64], dst: &mut [Complex64]| {
        op.apply_complex(src, dst);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (*d - s * centre) / half;
        }
    };
    let mut prev = f.values().to_vec();
    let mut out: Vec<Complex64> = prev.iter().map(|v| v * coeffs[0]).collect();
    if coeffs.len() > 1 {
        let mut cur = vec![Complex64::new(0.0, 0.0); n];
        apply_scaled(&prev, &mut cur);
        for (o, c) in out.iter_mut().zip(&cur) {
            *o += c * coeffs[1];
        }
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for &c in &coeffs[2..] {
            apply_scaled(&cur, &mut next);
            for i in 0..n {
                next[i] = 2.0 * next[i] - prev[i];
                out[i] += next[i] * c;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    let global = Complex64::from_polar(1.0, -t * centre);
    for v in out.iter_mut() {
        *v *= global;
    }
    LatticeField::from_values(*f.lattice(), out)
}

fn minus_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `J_0(x), ..., J_K(x)` for `x >= 0`, truncated after the last order whose
/// magnitude is at least `cutoff`. `None` if more than `max_terms` orders
/// would be needed.
///
/// Miller's backward recurrence normalized by `J_0 + 2 Σ J_{2k} = 1`.
pub(crate) fn bessel_j_sequence(x: f64, cutoff: f64, max_terms: usize) -> Option<Vec<f64>> {
    if x == 0.0 {
        return Some(vec![1.0]);
    }
    // Beyond order x the terms fall off like exp(-(k - x)^{3/2} ...); this
    // start is comfortably past the truncation point for any cutoff above
    // 1e-300.
    let start = (x + 20.0 * x.cbrt() + 60.0).ceil() as usize;
    if start > max_terms.saturating_mul(2).saturating_add(200) {
        return None;
    }
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in j.iter_mut() {
        *v /= norm;
    }
    let last = j.iter().rposition(|v| v.abs() >= cutoff).unwrap_or(0);
    if last + 1 > max_terms {
        return None;
    }
    j.truncate(last + 1);
    Some(j)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::hamlab::eigs_in_window;
    use crate::lattice::{Potential, Site};

    fn periodic(dim: usize, radius: i64) -> LatticeBox {
        LatticeBox::periodic(dim, radius).unwrap()
    }

    #[test]
    fn bessel_values() {
        // J_0(1), J_1(1), J_5(10) from standard tables.
        let j = bessel_j_sequence(1.0, 1e-20, 1000).unwrap();
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 1e-20, 1000).unwrap();
        assert!((j[5] - -0.234_061_528_186_793_6).abs() < 1e-14);
        let j = bessel_j_sequence(500.0, 1e-14, 100_000).unwrap();
        let sum_sq = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        assert!((sum_sq - 1.0).abs() < 1e-12);
        assert!(j.len() > 500 && j.len() < 700);
        assert!(bessel_j_sequence(500.0, 1e-14, 100).is_none());
    }

    #[test]
    fn free_propagation_at_zero_time_is_identity() {
        let lattice = periodic(2, 5);
        let f = LatticeField::gaussian(lattice, &Site::from([1, -2]), 1.5);
        let g = free_propagate(&f, 0.0).unwrap();
        assert!(f.distance(&g).unwrap() < 1e-14);
    }

    #[test]
    fn free_propagation_acts_on_plane_waves() {
        let lattice = periodic(2, 4);
        let k = [2, 7];
        let f = LatticeField::plane_wave(lattice, &k).unwrap();
        let side = lattice.side() as f64;
        let a: f64 = k
            .iter()
            .map(|&k| 2.0 - 2.0 * (2.0 * PI * k as f64 / side).cos())
            .sum();
        let g = free_propagate(&f, 1.7).unwrap();
        let expected = f.scaled(Complex64::from_polar(1.0, 1.7 * a));
        assert!(g.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn free_propagation_rejects_dirichlet() {
        let lattice = LatticeBox::dirichlet(1, 3).unwrap();
        assert!(free_propagate(&LatticeField::zeros(lattice), 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn free_propagation_is_a_unitary_group(
            t in -20.0f64..20.0,
            s in -20.0f64..20.0,
            cx in -6i64..=6,
            cy in -6i64..=6,
        ) {
            let lattice = periodic(2, 6);
            let f = LatticeField::gaussian(lattice, &Site::from([cx, cy]), 1.2);
            let ft = free_propagate(&f, t).unwrap();
            prop_assert!((ft.norm() - f.norm()).abs() < 1e-12);
            let composed = free_propagate(&ft, s).unwrap();
            let direct = free_propagate(&f, t + s).unwrap();
            prop_assert!(composed.distance(&direct).unwrap() < 1e-11);
        }
    }

    #[test]
    fn chebyshev_matches_free_propagation_without_potential() {
        let lattice = periodic(2, 12);
        let op = BoxOperator::free(lattice);
        let f = LatticeField::gaussian(lattice, &Site::from([0, 0]), 1.0);
        for &t in &[0.5, 3.0, 9.0] {
            let tol = 1e-10;
            let cheb = full_propagate(&op, &f, t, tol).unwrap();
            let exact = free_propagate(&f, -t).unwrap();
            assert!(cheb.distance(&exact).unwrap() < tol, "t = {t}");
        }
    }

    #[test]
    fn chebyshev_rotates_eigenvectors() {
        let lattice = periodic(1, 8);
        let v = Potential::from_entries(1, [(Site::from([0]), -1.3), (Site::from([4]), 0.7)])
            .unwrap();
        let op = BoxOperator::new(lattice, v).unwrap();
        let spec = eigs_in_window(&op, -10.0, 10.0, 100).unwrap();
        let tol = 1e-10;
        for pair in spec.pairs.iter().step_by(4) {
            let t = 6.5;
            let evolved = full_propagate(&op, &pair.vector, t, tol).unwrap();
            let expected = pair.vector.scaled(Complex64::from_polar(1.0, -t * pair.value));
            assert!(evolved.distance(&expected).unwrap() < tol);
        }
    }

    #[test]
    fn chebyshev_preserves_norm() {
        let lattice = periodic(2, 10);
        let v = Potential::from_entries(2, [(Site::from([1, 0]), 1.0), (Site::from([3, 3]), -2.0)])
            .unwrap();
        let op = BoxOperator::new(lattice, v).unwrap();
        let f = LatticeField::gaussian(lattice, &Site::from([0, 0]), 1.0);
        let tol = 1e-8;
        for &t in &[1.0, 10.0, 100.0] {
            let g = full_propagate(&op, &f, t, tol).unwrap();
            assert!((g.norm() - 1.0).abs() <= 10.0 * tol, "t = {t}");
        }
        // Backwards in time undoes forwards.
        let g = full_propagate(&op, &f, 7.0, 1e-11).unwrap();
        let back = full_propagate(&op, &g, -7.0, 1e-11).unwrap();
        assert!(back.distance(&f).unwrap() < 1e-10);
    }

    #[test]
    fn chebyshev_refuses_overlong_expansions() {
        let lattice = periodic(1, 4);
        let op = BoxOperator::free(lattice);
        let f = LatticeField::delta(lattice, &Site::from([0])).unwrap();
        assert!(matches!(
            full_propagate_with(&op, &f, 1e4, 1e-8, 1000),
            Err(LabError::NonConvergence { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        let p = periodic(1, 3);
        assert!(PropagatorSpec::new(p, vec![1.0, 2.0], 1e-8).is_ok());
        assert!(PropagatorSpec::new(p, vec![2.0, 1.0], 1e-8).is_err());
        assert!(PropagatorSpec::new(p, vec![0.0, 1.0], 1e-8).is_err());
        assert!(PropagatorSpec::new(p, vec![1.0], 1e-3).is_err());
        assert!(PropagatorSpec::new(p, vec![], 1e-8).is_err());
        let d = LatticeBox::dirichlet(1, 3).unwrap();
        assert!(PropagatorSpec::new(d, vec![1.0], 1e-8).is_err());
    }
}
