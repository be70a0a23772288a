use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{canonical_cmp, to_complex, CMatrix};
use crate::error::{MorError, Result};

/// Eigenvector matrices with condition number above this are rejected.
pub const NON_DIAGONALIZABLE_CONDITION: f64 = 1e12;

/// `M = R diag(values) R^{-1}` for a real matrix `M`.
///
/// Eigenvalues come sorted by (real, imaginary) ascending. Complex eigenvalues
/// appear in exact conjugate pairs whose eigenvector columns (and the matching
/// rows of `R^{-1}`) are exact conjugates; real eigenvalues carry real vectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub right_vectors: CMatrix,
    pub inverse_right_vectors: CMatrix,
    pub condition: f64,
}

impl EigenDecomposition {
    /// Index of the conjugate partner of eigenvalue `k` (itself when real).
    pub fn partner(&self, k: usize) -> usize {
        conjugate_partner(&self.values, k)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.values.clone()));
        &self.right_vectors * d * &self.inverse_right_vectors
    }
}

pub(crate) fn conjugate_partner(values: &[Complex64], k: usize) -> usize {
    if values[k].im == 0.0 {
        return k;
    }
    let target = values[k].conj();
    (0..values.len())
        .filter(|&j| j != k)
        .min_by(|&i, &j| {
            (values[i] - target)
                .norm()
                .total_cmp(&(values[j] - target).norm())
        })
        .unwrap_or(k)
}

pub fn eigendecompose(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let r = m.nrows();
    if r != m.ncols() || r == 0 {
        return Err(MorError::DimensionMismatch(format!(
            "eigendecompose of a {}x{} matrix",
            r,
            m.ncols()
        )));
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(
        MorError::NonDiagonalizable {
            condition: f64::INFINITY,
        },
    )?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    // Real Schur returns exact conjugate pairs; tiny imaginary parts from
    // 2x2 blocks with nearly real eigenvalues are folded to the real axis.
    for v in values.iter_mut() {
        if v.im.abs() <= 1e-14 * scale {
            v.im = 0.0;
        }
    }
    values.sort_by(canonical_cmp);

    let mut vectors = CMatrix::zeros(r, r);
    let mut done = vec![false; r];
    let group_tol = 1e-10 * scale;
    for k in 0..r {
        if done[k] {
            continue;
        }
        let lambda = values[k];
        if lambda.im < 0.0 {
            // filled from its partner with positive imaginary part
            continue;
        }
        let group: Vec<usize> = (k..r)
            .filter(|&j| !done[j] && (values[j] - lambda).norm() <= group_tol)
            .collect();
        let basis = null_vectors(m, lambda, group.len());
        for (slot, &j) in group.iter().enumerate() {
            let v = basis.column(slot).into_owned();
            vectors.set_column(j, &v);
            done[j] = true;
            if lambda.im != 0.0 {
                let p = conjugate_partner(&values, j);
                if !done[p] {
                    vectors.set_column(p, &v.map(|x| x.conj()));
                    done[p] = true;
                }
            }
        }
    }
    if done.iter().any(|d| !d) {
        // A negative-imaginary eigenvalue without a positive partner cannot
        // come out of a real Schur form; treat as breakdown.
        return Err(MorError::NonDiagonalizable {
            condition: f64::INFINITY,
        });
    }

    // A defective eigenvalue has fewer null vectors than its multiplicity;
    // the extra singular vectors then fail the eigen-equation.
    let lambda = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.clone()));
    let residual = (to_complex(m) * &vectors - &vectors * lambda).norm();
    if !(residual <= 1e-8 * scale) {
        return Err(MorError::NonDiagonalizable {
            condition: f64::INFINITY,
        });
    }
    let sv = vectors.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= NON_DIAGONALIZABLE_CONDITION) {
        return Err(MorError::NonDiagonalizable { condition });
    }
    let mut inverse = vectors
        .clone()
        .lu()
        .try_inverse()
        .ok_or(MorError::NonDiagonalizable {
            condition: f64::INFINITY,
        })?;
    for k in 0..r {
        if values[k].im == 0.0 {
            for j in 0..r {
                inverse[(k, j)].im = 0.0;
            }
        } else if values[k].im > 0.0 {
            let p = conjugate_partner(&values, k);
            for j in 0..r {
                inverse[(p, j)] = inverse[(k, j)].conj();
            }
        }
    }
    Ok(EigenDecomposition {
        values,
        right_vectors: vectors,
        inverse_right_vectors: inverse,
        condition,
    })
}

/// Unit-norm basis of the (numerical) null space of `M - lambda I`, `count`
/// columns, taken from the smallest right singular vectors. Real for real
/// `lambda`; phase-normalized so the largest component is real positive.
fn null_vectors(m: &DMatrix<f64>, lambda: Complex64, count: usize) -> CMatrix {
    let r = m.nrows();
    let mut out = CMatrix::zeros(r, count);
    if lambda.im == 0.0 {
        let mut shifted = m.clone();
        for i in 0..r {
            shifted[(i, i)] -= lambda.re;
        }
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("requested V^T");
        let order = ascending(&svd.singular_values.iter().copied().collect::<Vec<_>>());
        for (slot, &idx) in order.iter().take(count).enumerate() {
            let mut v: Vec<f64> = vt.row(idx).iter().copied().collect();
            let big = v
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(1.0);
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            for (i, x) in v.into_iter().enumerate() {
                out[(i, slot)] = Complex64::new(x, 0.0);
            }
        }
    } else {
        let mut shifted = to_complex(m);
        for i in 0..r {
            shifted[(i, i)] -= lambda;
        }
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("requested V^H");
        let order = ascending(&svd.singular_values.iter().copied().collect::<Vec<_>>());
        for (slot, &idx) in order.iter().take(count).enumerate() {
            let v: Vec<Complex64> = vt.row(idx).iter().map(|x| x.conj()).collect();
            let big = v
                .iter()
                .copied()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap_or(Complex64::new(1.0, 0.0));
            let phase = if big.norm() > 0.0 {
                big.conj() / big.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for (i, x) in v.into_iter().enumerate() {
                out[(i, slot)] = x * phase / norm;
            }
        }
    }
    out
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn diagonal_values_sorted() {
        let m = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let e = eigendecompose(&m).unwrap();
        assert_eq!(e.values, vec![Complex64::new(-2.0, 0.0), Complex64::new(-1.0, 0.0)]);
        // vectors are a permutation of the identity
        assert!((e.right_vectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.right_vectors[(0, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_generator() {
        let m = dmatrix![0.0, 1.0; -1.0, 0.0];
        let e = eigendecompose(&m).unwrap();
        assert!((e.values[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((e.values[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        let col0 = e.right_vectors.column(0);
        let col1 = e.right_vectors.column(1);
        assert!((col0.map(|x| x.conj()) - col1).norm() < 1e-15);
        assert!((e.reconstruct() - to_complex(&m)).norm() < 1e-14);
    }

    #[test]
    fn repeated_eigenvalue_of_scaled_identity() {
        let m = DMatrix::<f64>::identity(3, 3) * -2.0;
        let e = eigendecompose(&m).unwrap();
        assert!(e.condition < 10.0);
        assert!((e.reconstruct() - to_complex(&m)).norm() < 1e-14);
    }

    #[test]
    fn jordan_block_is_rejected() {
        let m = dmatrix![1.0, 1.0; 0.0, 1.0];
        assert!(matches!(
            eigendecompose(&m),
            Err(MorError::NonDiagonalizable { .. })
        ));
    }
}
