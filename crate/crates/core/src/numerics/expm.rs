//! Scaling-and-squaring matrix exponential with diagonal Padé approximants.
//!
//! Degree and scaling are selected from the 1-norm thresholds of Higham's
//! 2005 analysis (degrees 3, 5, 7, 9, 13). The routine is generic over real
//! and complex entries.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{MorError, Result};

use super::{identity, is_finite_matrix, norm1};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Returns `e^M`.
///
/// Overflow is detected after the fact: if any squaring step produces a
/// non-finite entry the call fails with [`MorError::OverflowRisk`], which is
/// the caller's cue to evaluate a shifted exponent instead.
pub fn matrix_exponential<T>(m: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = m.nrows();
    if n != m.ncols() {
        return Err(MorError::DimensionMismatch(format!(
            "matrix exponential of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if !is_finite_matrix(m) {
        return Err(MorError::NonFinite("matrix exponential argument".into()));
    }
    let norm = norm1(m);
    if norm == 0.0 {
        return Ok(identity(n));
    }

    let (mut result, squarings) = if norm <= THETA_3 {
        (pade(m, &PADE_3)?, 0)
    } else if norm <= THETA_5 {
        (pade(m, &PADE_5)?, 0)
    } else if norm <= THETA_7 {
        (pade(m, &PADE_7)?, 0)
    } else if norm <= THETA_9 {
        (pade(m, &PADE_9)?, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scale = 2f64.powi(-s);
        let scaled = m.map(|x| x * T::from_real(scale));
        (pade13(&scaled)?, s)
    };

    for step in 0..squarings {
        result = &result * &result;
        if !is_finite_matrix(&result) {
            return Err(MorError::OverflowRisk {
                detail: format!(
                    "squaring step {} of {} (argument 1-norm {:.3e})",
                    step + 1,
                    squarings,
                    norm
                ),
            });
        }
    }
    if !is_finite_matrix(&result) {
        return Err(MorError::OverflowRisk {
            detail: format!("Pade approximant (argument 1-norm {:.3e})", norm),
        });
    }
    Ok(result)
}

/// Action `e^{A t} B` on a block of vectors via the dense exponential.
pub fn exp_action<T>(a: &DMatrix<T>, t: f64, b: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if t < 0.0 {
        return Err(MorError::InvalidConfig(format!(
            "exponential action needs t >= 0, got {t}"
        )));
    }
    if a.nrows() != b.nrows() {
        return Err(MorError::DimensionMismatch(format!(
            "exp_action: A is {}x{}, B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if t == 0.0 {
        return Ok(b.clone());
    }
    let scaled = a.map(|x| x * T::from_real(t));
    Ok(matrix_exponential(&scaled)? * b)
}

/// Truncated Taylor action `e^{M} X` for small `||M||` (used where only a few
/// columns are needed and `||M||_1 <= 1`).
pub(crate) fn taylor_action<T>(m: &DMatrix<T>, x: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let mut sum = x.clone();
    let mut term = x.clone();
    let base = sum.norm().max(f64::MIN_POSITIVE);
    for k in 1..60 {
        term = (m * &term).map(|v| v * T::from_real(1.0 / k as f64));
        sum += &term;
        if term.norm() <= 1e-18 * base {
            break;
        }
    }
    sum
}

fn pade<T>(m: &DMatrix<T>, c: &[f64]) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = m.nrows();
    let ident: DMatrix<T> = identity(n);
    let m2 = m * m;
    // Even powers feed V, odd powers (times M) feed U.
    let mut powers = vec![ident.clone(), m2.clone()];
    while powers.len() * 2 < c.len() {
        let next = powers.last().unwrap() * &m2;
        powers.push(next);
    }
    let mut u_inner = DMatrix::<T>::zeros(n, n);
    let mut v = DMatrix::<T>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 < c.len() {
            u_inner += p.map(|x| x * T::from_real(c[2 * k + 1]));
        }
        if 2 * k < c.len() {
            v += p.map(|x| x * T::from_real(c[2 * k]));
        }
    }
    let u = m * u_inner;
    solve_pade(u, v)
}

fn pade13<T>(m: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = m.nrows();
    let c = &PADE_13;
    let ident: DMatrix<T> = identity(n);
    let m2 = m * m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    let sc = |a: &DMatrix<T>, k: usize| a.map(|x| x * T::from_real(c[k]));

    let inner_u = &m6 * (sc(&m6, 13) + sc(&m4, 11) + sc(&m2, 9));
    let u = m * (inner_u + sc(&m6, 7) + sc(&m4, 5) + sc(&m2, 3) + sc(&ident, 1));
    let inner_v = &m6 * (sc(&m6, 12) + sc(&m4, 10) + sc(&m2, 8));
    let v = inner_v + sc(&m6, 6) + sc(&m4, 4) + sc(&m2, 2) + sc(&ident, 0);
    solve_pade(u, v)
}

fn solve_pade<T>(u: DMatrix<T>, v: DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let numer = &v + &u;
    let denom = v - u;
    denom.lu().solve(&numer).ok_or_else(|| MorError::OverflowRisk {
        detail: "singular Pade denominator".into(),
    })
}
