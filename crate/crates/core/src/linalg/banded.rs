//! Real banded matrices: inertia counts and pivoted LU solves.

/// Symmetric band matrix stored by rows, `(i, j)` kept for `|i - j| <= b`.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    b: usize,
    /// Row-major, width `2b + 1`, entry `(i, j)` at `i * w + (j + b - i)`.
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, b: usize) -> Self {
        SymBand {
            n,
            b,
            data: vec![0.0; n * (2 * b + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (2 * self.b + 1) + (j + self.b - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.b {
            0.0
        } else {
            self.data[self.at(i, j)]
        }
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i.abs_diff(j) <= self.b, "entry outside the band");
        let a = self.at(i, j);
        let b = self.at(j, i);
        self.data[a] = value;
        self.data[b] = value;
    }

    /// Number of eigenvalues strictly below `sigma`, by Sylvester's law of
    /// inertia applied to an unpivoted `L D L^T` factorization of `A - sigma`.
    ///
    /// Without pivoting the factorization is only reliable when no pivot is
    /// small, so a shift landing (nearly) on an eigenvalue is nudged by a few
    /// ulps of the matrix scale and the count retried. The answer is then the
    /// count at a point within `~1e-13 * scale` of `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let scale = self
            .data
            .iter()
            .fold(sigma.abs(), |m, v| m.max(v.abs()))
            .max(1.0);
        let mut shift = sigma;
        for attempt in 0..8 {
            if let Some(count) = self.ldl_negatives(shift, 1e-10 * scale) {
                return count;
            }
            shift = sigma + 1e-14 * scale * f64::from(1 << attempt);
        }
        self.ldl_negatives(shift, 0.0).expect("threshold zero never rejects")
    }

    /// Negative pivots of `A - sigma = L D L^T`, or `None` if some pivot is
    /// below `threshold` in magnitude.
    fn ldl_negatives(&self, sigma: f64, threshold: f64) -> Option<usize> {
        let n = self.n;
        let b = self.b;
        let tiny = f64::MIN_POSITIVE;
        // Lower band only: low[i][k] for k in i-b..=i, at i * (b + 1) + (k + b - i).
        let w = b + 1;
        let mut low = vec![0.0; n * w];
        for i in 0..n {
            for k in i.saturating_sub(b)..=i {
                let mut v = self.get(i, k);
                if i == k {
                    v -= sigma;
                }
                low[i * w + (k + b - i)] = v;
            }
        }
        let mut negatives = 0;
        for k in 0..n {
            let mut d = low[k * w + b];
            if d.abs() < threshold {
                return None;
            }
            if d.abs() < tiny {
                d = tiny;
                low[k * w + b] = d;
            }
            if d < 0.0 {
                negatives += 1;
            }
            let last = (k + b).min(n - 1);
            for i in k + 1..=last {
                let aik = low[i * w + (k + b - i)];
                if aik == 0.0 {
                    continue;
                }
                let lik = aik / d;
                for j in k + 1..=i {
                    let ajk = low[j * w + (k + b - j)];
                    if ajk != 0.0 {
                        low[i * w + (j + b - i)] -= lik * ajk;
                    }
                }
            }
        }
        Some(negatives)
    }

    /// Pivoted LU factorization of `A - sigma I`.
    pub fn lu_shifted(&self, sigma: f64) -> BandLu {
        BandLu::factor(self, sigma)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.b);
            let hi = (i + self.b).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.data[self.at(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }
}

/// LU factors of a band matrix with partial pivoting (`kl = ku = b` before
/// fill-in, `ku = 2b` after).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Entry `(i, j)` for `j in i-kl ..= i+kl+ku` at `i * w + (j + kl - i)`.
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn factor(a: &SymBand, sigma: f64) -> Self {
        let n = a.n;
        let kl = a.b;
        let ku = a.b;
        let w = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                let mut v = a.get(i, j);
                if i == j {
                    v -= sigma;
                }
                data[i * w + (j + kl - i)] = v;
            }
        }
        let scale = data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tiny = f64::EPSILON * scale * 1e-3;
        let mut pivots = vec![0; n];
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = data[idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = data[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    data.swap(idx(k, j), idx(p, j));
                }
            }
            if data[idx(k, k)].abs() < tiny {
                data[idx(k, k)] = tiny;
            }
            let pivot = data[idx(k, k)];
            for i in k + 1..=last_row {
                let m = data[idx(i, k)] / pivot;
                data[idx(i, k)] = m;
                if m == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    data[idx(i, j)] -= m * data[idx(k, j)];
                }
            }
        }
        BandLu {
            n,
            kl,
            ku,
            data,
            pivots,
        }
    }

    /// Solves in place.
    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.n;
        let w = 2 * self.kl + self.ku + 1;
        let kl = self.kl;
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                rhs.swap(k, p);
            }
            let last_row = (k + kl).min(n - 1);
            let bk = rhs[k];
            for i in k + 1..=last_row {
                rhs[i] -= self.data[idx(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + kl + self.ku).min(n - 1);
            let mut acc = rhs[i];
            for j in i + 1..=last_col {
                acc -= self.data[idx(i, j)] * rhs[j];
            }
            rhs[i] = acc / self.data[idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_band(n: usize, b: usize, seed: u64) -> SymBand {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SymBand::zeros(n, b);
        for i in 0..n {
            for j in i..(i + b + 1).min(n) {
                m.set(i, j, rng.random_range(-2.0..2.0));
            }
        }
        m
    }

    fn dense(m: &SymBand) -> DMatrix<f64> {
        DMatrix::from_fn(m.n(), m.n(), |i, j| m.get(i, j))
    }

    #[test]
    fn inertia_matches_dense_eigenvalues() {
        for (b, seed) in [(1, 1), (3, 2), (7, 3)] {
            let m = random_band(40, b, seed);
            let eig = dense(&m).symmetric_eigenvalues();
            for sigma in [-3.0, -0.71, 0.0, 0.33, 2.5] {
                let expected = eig.iter().filter(|&&l| l < sigma).count();
                assert_eq!(m.count_below(sigma), expected, "b={b} sigma={sigma}");
            }
        }
    }

    #[test]
    fn lu_solves_indefinite_systems() {
        let m = random_band(50, 4, 9);
        let lu = m.lu_shifted(0.3);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut rhs = vec![0.0; 50];
        m.matvec(&x_true, &mut rhs);
        for (r, x) in rhs.iter_mut().zip(&x_true) {
            *r -= 0.3 * x;
        }
        lu.solve(&mut rhs);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
