use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{norm1, real_times_complex, CMatrix};
use crate::error::{MorError, Result};

/// Pivot threshold relative to `n * eps * ||sI - A||_1`.
const PIVOT_FACTOR: f64 = 1.0;

fn pivot_threshold(n: usize, scale: f64) -> f64 {
    PIVOT_FACTOR * n as f64 * f64::EPSILON * scale.max(f64::MIN_POSITIVE)
}

/// Solves `(sigma I - A) X = rhs` with a dense LU factorization.
pub fn shifted_solve(a: &DMatrix<f64>, sigma: Complex64, rhs: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n || rhs.nrows() != n {
        return Err(MorError::DimensionMismatch(format!(
            "shifted_solve: A is {}x{}, rhs has {} rows",
            n,
            a.ncols(),
            rhs.nrows()
        )));
    }
    let mut m = a.map(|x| Complex64::new(-x, 0.0));
    for i in 0..n {
        m[(i, i)] += sigma;
    }
    let scale = norm1(&m);
    let lu = m.lu();
    let u = lu.u();
    let smallest = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if !(smallest > pivot_threshold(n, scale)) {
        return Err(MorError::SingularShift {
            shift: sigma,
            pivot: smallest,
        });
    }
    lu.solve(rhs).ok_or(MorError::SingularShift {
        shift: sigma,
        pivot: smallest,
    })
}

/// Orthogonal Hessenberg form `A = Q H Q^T`, computed once and reused for
/// O(n^2) shifted solves with any number of shifts.
#[derive(Debug, Clone)]
pub struct HessenbergResolvent {
    q: DMatrix<f64>,
    h: DMatrix<f64>,
    scale: f64,
}

impl HessenbergResolvent {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let (q, mut h) = if n <= 2 {
            (DMatrix::identity(n, n), a.clone())
        } else {
            a.clone().hessenberg().unpack()
        };
        for j in 0..n {
            for i in (j + 2)..n {
                h[(i, j)] = 0.0;
            }
        }
        let scale = norm1(a);
        HessenbergResolvent { q, h, scale }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Factors `sigma I - H` by Gaussian elimination with adjacent-row pivoting.
    pub fn factor(&self, sigma: Complex64) -> Result<ShiftedHessenbergLu<'_>> {
        let n = self.dim();
        let mut u = CMatrix::from_fn(n, n, |i, j| {
            let v = Complex64::new(-self.h[(i, j)], 0.0);
            if i == j {
                v + sigma
            } else {
                v
            }
        });
        let mut multipliers = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            if u[(k + 1, k)].norm() > u[(k, k)].norm() {
                u.swap_rows(k, k + 1);
                swapped[k] = true;
            }
            let pivot = u[(k, k)];
            if pivot.norm() == 0.0 {
                continue;
            }
            let l = u[(k + 1, k)] / pivot;
            multipliers[k] = l;
            u[(k + 1, k)] = Complex64::new(0.0, 0.0);
            for j in (k + 1)..n {
                let ukj = u[(k, j)];
                u[(k + 1, j)] -= l * ukj;
            }
        }
        let scale = self.scale + sigma.norm();
        let smallest = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if !(smallest > pivot_threshold(n, scale)) {
            return Err(MorError::SingularShift {
                shift: sigma,
                pivot: smallest,
            });
        }
        Ok(ShiftedHessenbergLu {
            resolvent: self,
            u,
            multipliers,
            swapped,
        })
    }

    /// `(sigma I - A)^{-1} rhs`.
    pub fn solve(&self, sigma: Complex64, rhs: &CMatrix) -> Result<CMatrix> {
        self.factor(sigma)?.solve(rhs)
    }

    /// `(sigma I - A^T)^{-1} rhs`.
    pub fn solve_transpose(&self, sigma: Complex64, rhs: &CMatrix) -> Result<CMatrix> {
        self.factor(sigma)?.solve_transpose(rhs)
    }
}

/// LU factors of `sigma I - H` for one shift.
#[derive(Debug, Clone)]
pub struct ShiftedHessenbergLu<'a> {
    resolvent: &'a HessenbergResolvent,
    u: CMatrix,
    multipliers: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl ShiftedHessenbergLu<'_> {
    fn check_rows(&self, rhs: &CMatrix) -> Result<()> {
        if rhs.nrows() != self.u.nrows() {
            return Err(MorError::DimensionMismatch(format!(
                "resolvent of order {} applied to {} rows",
                self.u.nrows(),
                rhs.nrows()
            )));
        }
        Ok(())
    }

    /// `(sigma I - A)^{-1} rhs`.
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_rows(rhs)?;
        let qt = self.resolvent.q.transpose();
        let mut y = real_times_complex(&qt, rhs);
        let n = self.u.nrows();
        for col in 0..y.ncols() {
            for k in 0..n.saturating_sub(1) {
                if self.swapped[k] {
                    y.swap((k, col), (k + 1, col));
                }
                let l = self.multipliers[k];
                let yk = y[(k, col)];
                y[(k + 1, col)] -= l * yk;
            }
            for i in (0..n).rev() {
                let mut s = y[(i, col)];
                for j in (i + 1)..n {
                    s -= self.u[(i, j)] * y[(j, col)];
                }
                y[(i, col)] = s / self.u[(i, i)];
            }
        }
        Ok(real_times_complex(&self.resolvent.q, &y))
    }

    /// `(sigma I - A^T)^{-1} rhs`, reusing the same factors.
    pub fn solve_transpose(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_rows(rhs)?;
        let qt = self.resolvent.q.transpose();
        let mut y = real_times_complex(&qt, rhs);
        let n = self.u.nrows();
        for col in 0..y.ncols() {
            // U^T z = y (forward substitution).
            for i in 0..n {
                let mut s = y[(i, col)];
                for j in 0..i {
                    s -= self.u[(j, i)] * y[(j, col)];
                }
                y[(i, col)] = s / self.u[(i, i)];
            }
            // Apply the transposed eliminations in reverse order.
            for k in (0..n.saturating_sub(1)).rev() {
                let l = self.multipliers[k];
                let yk1 = y[(k + 1, col)];
                y[(k, col)] -= l * yk1;
                if self.swapped[k] {
                    y.swap((k, col), (k + 1, col));
                }
            }
        }
        Ok(real_times_complex(&self.resolvent.q, &y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_resolvent() {
        let a = dmatrix![0.0];
        let x = shifted_solve(&a, c(2.0, 0.0), &CMatrix::from_element(1, 1, c(4.0, 0.0))).unwrap();
        assert!((x[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_resolvent() {
        let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let x = shifted_solve(&a, c(1.0, 0.0), &CMatrix::identity(2, 2)).unwrap();
        assert!((x[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((x[(1, 1)].re - 1.0 / 3.0).abs() < 1e-15);
        assert!(x[(0, 1)].norm() < 1e-16);
    }

    #[test]
    fn eigenvalue_shift_is_singular() {
        let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let rhs = CMatrix::identity(2, 2);
        assert!(matches!(
            shifted_solve(&a, c(-2.0, 0.0), &rhs),
            Err(MorError::SingularShift { .. })
        ));
        let res = HessenbergResolvent::new(&a);
        assert!(matches!(
            res.solve(c(-1.0, 0.0), &rhs),
            Err(MorError::SingularShift { .. })
        ));
    }

    #[test]
    fn hessenberg_paths_match_dense() {
        let a = dmatrix![
            -1.0, 2.0, 0.5, 0.1;
            0.3, -2.0, 1.0, -0.4;
            0.7, 0.2, -3.0, 0.9;
            -0.5, 0.6, 0.8, -0.5
        ];
        let rhs = CMatrix::from_fn(4, 2, |i, j| c(i as f64 - 1.0, 0.5 * j as f64 + 0.1));
        let sigma = c(0.7, 0.3);
        let res = HessenbergResolvent::new(&a);
        let x = res.solve(sigma, &rhs).unwrap();
        let x_ref = shifted_solve(&a, sigma, &rhs).unwrap();
        assert!((&x - &x_ref).norm() < 1e-13);
        let xt = res.solve_transpose(sigma, &rhs).unwrap();
        let xt_ref = shifted_solve(&a.transpose(), sigma, &rhs).unwrap();
        assert!((&xt - &xt_ref).norm() < 1e-13);
    }
}
