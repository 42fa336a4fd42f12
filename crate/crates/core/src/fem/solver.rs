//! Symmetric banded storage with a direct Cholesky path for moderate
//! problems and Jacobi-preconditioned conjugate gradients beyond that.

use crate::error::FemError;
use crate::exec;

/// Lower-triangular band, column packed: `data[j * (sb + 1) + d]` holds
/// `A[j + d][j]` for `d` in `0..=sb`.
pub struct BandedMatrix {
    pub n: usize,
    pub sb: usize,
    pub data: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(n: usize, sb: usize) -> Self {
        BandedMatrix {
            n,
            sb,
            data: vec![0.0; n * (sb + 1)],
        }
    }

    /// Accumulates into the lower triangle; upper-triangle calls are
    /// ignored so callers can scatter full element matrices.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            debug_assert!(i - j <= self.sb);
            self.data[j * (self.sb + 1) + (i - j)] += v;
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        // Symmetric fetch, any (i, j) within the band.
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.sb {
            0.0
        } else {
            self.data[c * (self.sb + 1) + (r - c)]
        }
    }

    /// `y = A x`, rows gathered independently.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let (n, sb) = (self.n, self.sb);
        exec::map_collect(n, |i| {
            let lo = i.saturating_sub(sb);
            let hi = (i + sb).min(n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.at(i, j) * x[j];
            }
            acc
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.data[j * (self.sb + 1)]).collect()
    }

    /// In-place Cholesky factorization, `A = L L'`.
    pub fn cholesky(mut self) -> Result<CholeskyFactor, FemError> {
        let (n, sb) = (self.n, self.sb);
        let w = sb + 1;
        for j in 0..n {
            for k in j.saturating_sub(sb)..j {
                let ljk = self.data[k * w + (j - k)];
                if ljk == 0.0 {
                    continue;
                }
                let hi = (k + sb).min(n - 1);
                for i in j..=hi {
                    self.data[j * w + (i - j)] -= self.data[k * w + (i - k)] * ljk;
                }
            }
            let pivot = self.data[j * w];
            if !(pivot > 0.0) {
                return Err(FemError::NotPositiveDefinite { dof: j, pivot });
            }
            let s = pivot.sqrt();
            self.data[j * w] = s;
            let hi = (j + sb).min(n - 1);
            for i in (j + 1)..=hi {
                self.data[j * w + (i - j)] /= s;
            }
        }
        Ok(CholeskyFactor(self))
    }
}

pub struct CholeskyFactor(BandedMatrix);

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.0;
        let (n, sb, w) = (m.n, m.sb, m.sb + 1);
        let mut x = b.to_vec();
        // L y = b
        for j in 0..n {
            x[j] /= m.data[j * w];
            let yj = x[j];
            let hi = (j + sb).min(n - 1);
            for i in (j + 1)..=hi {
                x[i] -= m.data[j * w + (i - j)] * yj;
            }
        }
        // L' x = y
        for j in (0..n).rev() {
            let hi = (j + sb).min(n - 1);
            let mut acc = x[j];
            for i in (j + 1)..=hi {
                acc -= m.data[j * w + (i - j)] * x[i];
            }
            x[j] = acc / m.data[j * w];
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    exec::sum(a.len(), |i| a[i] * b[i])
}

/// Jacobi-preconditioned conjugate gradients to a relative residual.
pub fn pcg(
    a: &BandedMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize), FemError> {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| 1.0 / d).collect();
    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = exec::map_collect(n, |i| inv_diag[i] * r[i]);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iters {
        let ap = a.matvec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt();
        if res <= rel_tol * norm_b {
            return Ok((x, it + 1));
        }
        z = exec::map_collect(n, |i| inv_diag[i] * r[i]);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt() / norm_b;
    Err(FemError::NoConvergence {
        iterations: max_iters,
        residual: res,
        tolerance: rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd_test_matrix(n: usize, sb: usize) -> BandedMatrix {
        let mut a = BandedMatrix::new(n, sb);
        for i in 0..n {
            a.add(i, i, 4.0 + (i % 3) as f64);
            for d in 1..=sb.min(n - 1 - i) {
                a.add(i + d, i, -1.0 / (d as f64 + 1.0));
            }
        }
        a
    }

    #[test]
    fn cholesky_solves_banded_system() {
        let n = 40;
        let a = spd_test_matrix(n, 3);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.matvec(&x_true);
        let x = a.cholesky().unwrap().solve(&b);
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pcg_matches_direct() {
        let n = 60;
        let b: Vec<f64> = (0..n).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let direct = spd_test_matrix(n, 4).cholesky().unwrap().solve(&b);
        let (iterative, iters) = pcg(&spd_test_matrix(n, 4), &b, 1e-12, 10_000).unwrap();
        assert!(iters > 0);
        for i in 0..n {
            assert!((direct[i] - iterative[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        let mut a = BandedMatrix::new(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0); // Schur complement goes negative here.
        a.add(2, 2, 1.0);
        match a.cholesky() {
            Err(FemError::NotPositiveDefinite { dof, pivot }) => {
                assert_eq!(dof, 1);
                assert!(pivot < 0.0);
            }
            _ => panic!("expected pivot failure"),
        }
    }

    #[test]
    fn matvec_symmetry() {
        let a = spd_test_matrix(25, 5);
        let x: Vec<f64> = (0..25).map(|i| (i as f64).cos()).collect();
        let y: Vec<f64> = (0..25).map(|i| (i as f64 * 0.3).sin()).collect();
        let ax = a.matvec(&x);
        let ay = a.matvec(&y);
        let xay: f64 = x.iter().zip(&ay).map(|(u, v)| u * v).sum();
        let yax: f64 = y.iter().zip(&ax).map(|(u, v)| u * v).sum();
        assert!((xay - yax).abs() < 1e-12);
    }
}
