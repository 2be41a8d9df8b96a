use num_complex::Complex64;

use crate::error::{LabError, Result};

/// Convergence record of a Krylov solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate orthogonal conjugate gradients for complex-symmetric systems
/// `A x = b`, with `A^T = A` (not Hermitian), e.g. `H - z` with real
/// symmetric `H`.
///
/// `apply(x, y)` must write `A x` into `y`. The recurrences use the bilinear
/// form `x^T y`; the stopping test uses the true Euclidean residual of the
/// recursively updated vector.
pub fn cocg(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    rhs: &[Complex64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<Complex64>, KrylovOutcome)> {
    let n = rhs.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut x = vec![zero; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            KrylovOutcome {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let bilinear = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(p, q)| p * q).sum()
    };
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut q = vec![zero; n];
    let mut rho = bilinear(&r, &r);
    let mut relative = 1.0;
    for it in 1..=max_iterations {
        apply(&p, &mut q);
        let pq = bilinear(&p, &q);
        if pq.norm() == 0.0 || !pq.re.is_finite() {
            return Err(LabError::Breakdown(format!(
                "COCG: p^T A p vanished at iteration {it} (residual {relative:e})"
            )));
        }
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        relative = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / bnorm;
        if relative <= tolerance {
            return Ok((
                x,
                KrylovOutcome {
                    iterations: it,
                    relative_residual: relative,
                },
            ));
        }
        let rho_next = bilinear(&r, &r);
        if rho.norm() == 0.0 {
            return Err(LabError::Breakdown(format!(
                "COCG: r^T r vanished at iteration {it} (residual {relative:e})"
            )));
        }
        let beta = rho_next / rho;
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(LabError::NonConvergence {
        what: "COCG",
        iterations: max_iterations,
        residual: relative,
    })
}
