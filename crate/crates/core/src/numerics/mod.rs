//! Dense real/complex kernels shared by the rest of the crate.

mod eigen;
mod expm;
mod gramian;
mod orth;
pub mod quadrature;
mod solve;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

pub use eigen::{eigendecompose, EigenDecomposition, NON_DIAGONALIZABLE_CONDITION};
pub use expm::{exp_action, matrix_exponential};
pub(crate) use expm::taylor_action;
pub use gramian::vanloan_limited_gramian;
pub use orth::{completed_orthonormal_basis, max_principal_angle, orthonormal_basis, span_residual, OrthonormalBasis, RANK_TOLERANCE};
pub use solve::{shifted_solve, HessenbergResolvent, ShiftedHessenbergLu};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) fn identity<T: ComplexField + Copy>(n: usize) -> DMatrix<T> {
    DMatrix::identity(n, n)
}

/// Maximum absolute column sum.
pub fn norm1<T: ComplexField<RealField = f64> + Copy>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_finite_matrix<T: ComplexField<RealField = f64> + Copy>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.modulus().is_finite())
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|x| x.re)
}

pub fn imag_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|x| x.im)
}

/// Product of a real matrix with a complex one, done as two real products so
/// the optimized real kernel does the work.
pub fn real_times_complex(a: &DMatrix<f64>, x: &CMatrix) -> CMatrix {
    let re = a * real_part(x);
    let im = a * imag_part(x);
    CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
        Complex64::new(re[(i, j)], im[(i, j)])
    })
}

/// Canonical ordering of complex points: real part, then imaginary part.
pub fn canonical_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Relative Frobenius distance `||a - b|| / ||b||` (absolute when `b = 0`).
pub fn rel_diff<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}
