use nalgebra::DMatrix;

use super::{is_finite_matrix, matrix_exponential, norm1};
use crate::error::{MorError, Result};

/// `P_tau = int_0^tau e^{At} B B^T e^{A^T t} dt`.
///
/// The Van Loan block exponential `exp(h [[-A, BB^T], [0, A^T]])` is taken on
/// a short step `h = tau / 2^s` with `||A h||_1 <= 1`, giving `P_h = F22^T F12`
/// and `e^{Ah} = F22^T`; the horizon is then doubled `s` times with
/// `P_{2h} = P_h + e^{Ah} P_h e^{A^T h}`. The short step keeps the `e^{-Ah}`
/// block bounded for stiff stable `A`.
pub fn vanloan_limited_gramian(a: &DMatrix<f64>, b: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(MorError::DimensionMismatch(format!(
            "gramian: A is {}x{}, B has {} rows",
            n,
            a.ncols(),
            b.nrows()
        )));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(MorError::InvalidConfig(format!(
            "gramian horizon must be positive, got {tau}"
        )));
    }
    let spread = norm1(a) * tau;
    let doublings = if spread > 1.0 {
        spread.log2().ceil() as u32
    } else {
        0
    };
    let h = tau / 2f64.powi(doublings as i32);

    let bbt = b * b.transpose();
    let mut block = DMatrix::<f64>::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-a * h));
    block.view_mut((0, n), (n, n)).copy_from(&(&bbt * h));
    block.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * h));
    let f = matrix_exponential(&block)?;
    let f12 = f.view((0, n), (n, n)).into_owned();
    let f22 = f.view((n, n), (n, n)).into_owned();
    let mut step = f22.transpose();
    let mut p = &step * f12;

    for _ in 0..doublings {
        p = &p + &step * &p * step.transpose();
        step = &step * &step;
        if !is_finite_matrix(&p) {
            return Err(MorError::OverflowRisk {
                detail: format!("gramian doubling overflowed at horizon {tau}"),
            });
        }
    }
    Ok((&p + p.transpose()) * 0.5)
}
