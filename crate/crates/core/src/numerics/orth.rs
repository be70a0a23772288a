use nalgebra::{ComplexField, DMatrix, DVector};

use super::real_part;
use crate::numerics::CMatrix;

/// Columns whose norm after orthogonalization drops below this fraction of
/// their original norm are treated as numerically dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OrthonormalBasis<T: ComplexField> {
    pub q: DMatrix<T>,
    /// One flag per input column: kept (`true`) or dropped as dependent.
    pub retained: Vec<bool>,
}

impl<T: ComplexField> OrthonormalBasis<T> {
    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.retained.iter().any(|k| !k)
    }
}

/// Orthonormal basis of the column span by modified Gram-Schmidt with one
/// re-orthogonalization pass. Columns are normalized before they are
/// orthogonalized, so the drop test is scale-free.
pub fn orthonormal_basis<T>(m: &DMatrix<T>) -> OrthonormalBasis<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = m.nrows();
    let mut kept: Vec<DVector<T>> = Vec::new();
    let mut retained = Vec::with_capacity(m.ncols());
    for col in m.column_iter() {
        let norm = col.norm();
        if !(norm > 0.0) {
            retained.push(false);
            continue;
        }
        let mut v: DVector<T> = col.map(|x| x.unscale(norm));
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dotc(&v);
                v.axpy(-proj, q, T::one());
            }
        }
        let rest = v.norm();
        if rest < RANK_TOLERANCE {
            retained.push(false);
        } else {
            v.unscale_mut(rest);
            kept.push(v);
            retained.push(true);
        }
    }
    let mut q = DMatrix::<T>::zeros(n, kept.len());
    for (j, v) in kept.iter().enumerate() {
        q.set_column(j, v);
    }
    OrthonormalBasis { q, retained }
}

/// Like [`orthonormal_basis`] but always returns `m.ncols()` columns (when
/// `m.ncols() <= m.nrows()`): each dropped column's residual is normalized
/// and kept anyway, as a Householder QR would, and an exactly vanishing
/// residual is replaced by the first coordinate direction outside the span.
/// `retained` still reports the numerical rank decision.
pub fn completed_orthonormal_basis(m: &DMatrix<f64>) -> OrthonormalBasis<f64> {
    let strict = orthonormal_basis(m);
    if !strict.is_rank_deficient() {
        return strict;
    }
    let n = m.nrows();
    let mut kept: Vec<DVector<f64>> = strict.q.column_iter().map(|c| c.into_owned()).collect();
    let orthogonalize = |v: &mut DVector<f64>, kept: &[DVector<f64>]| {
        for _ in 0..3 {
            for q in kept {
                let proj = q.dot(v);
                v.axpy(-proj, q, 1.0);
            }
        }
    };
    let mut unit = 0;
    for (col, &ok) in m.column_iter().zip(&strict.retained) {
        if ok || kept.len() >= n {
            continue;
        }
        let norm = col.norm();
        let mut v: DVector<f64> = if norm > 0.0 { col / norm } else { col.into_owned() };
        orthogonalize(&mut v, &kept);
        let mut rest = v.norm();
        while !(rest > 1e-14) && unit < n {
            v = DVector::zeros(n);
            v[unit] = 1.0;
            unit += 1;
            orthogonalize(&mut v, &kept);
            rest = v.norm();
        }
        if rest > 0.0 {
            kept.push(v / rest);
        }
    }
    OrthonormalBasis {
        q: DMatrix::from_columns(&kept),
        retained: strict.retained,
    }
}

/// Largest principal angle (radians) between the spans of two real bases,
/// from the sines `svd((I - Q1 Q1^T) Q2)`, which stay accurate for small
/// angles.
pub fn max_principal_angle(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let qx = orthonormal_basis(x).q;
    let qy = orthonormal_basis(y).q;
    if qx.ncols() != qy.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    let residual = &qy - &qx * (qx.transpose() * &qy);
    let s = residual.svd(false, false).singular_values.max();
    s.min(1.0).asin()
}

/// Residual of projecting a complex vector onto a real orthonormal basis,
/// relative to the vector's norm.
pub fn span_residual(q: &DMatrix<f64>, v: &CMatrix) -> f64 {
    let re = real_part(v);
    let im = v.map(|x| x.im);
    let r_re = &re - q * (q.transpose() * &re);
    let r_im = &im - q * (q.transpose() * &im);
    let num = (r_re.norm_squared() + r_im.norm_squared()).sqrt();
    let den = v.norm();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
