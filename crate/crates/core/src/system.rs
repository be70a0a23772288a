//! Full and reduced LTI systems `x' = Ax + Bu, y = Cx` and their
//! (limited-time) transfer functions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::numerics::{
    eigendecompose, exp_action, is_finite_matrix, matrix_exponential, real_times_complex,
    shifted_solve, to_complex, CMatrix, CVector, HessenbergResolvent,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub label: String,
}

impl StateSpaceSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(MorError::DimensionMismatch(format!(
                "state matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(MorError::DimensionMismatch(format!(
                "B is {}x{} but the state dimension is {n}",
                b.nrows(),
                b.ncols()
            )));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(MorError::DimensionMismatch(format!(
                "C is {}x{} but the state dimension is {n}",
                c.nrows(),
                c.ncols()
            )));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C")] {
            if !is_finite_matrix(m) {
                return Err(MorError::NonFinite(name.into()));
            }
        }
        Ok(StateSpaceSystem {
            a,
            b,
            c,
            label: label.into(),
        })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Eigenvalues of `A` (dense; intended for small and moderate orders).
    pub fn poles(&self) -> Vec<Complex64> {
        let mut p: Vec<Complex64> = self.a.complex_eigenvalues().iter().copied().collect();
        p.sort_by(crate::numerics::canonical_cmp);
        p
    }

    /// Largest real part over the spectrum of `A`.
    pub fn spectral_abscissa(&self) -> f64 {
        self.poles().iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub system: StateSpaceSystem,
    pub order: usize,
    /// Whether the real realization was obtained by realifying a complex
    /// projection basis.
    pub realified: bool,
}

impl ReducedModel {
    pub fn new(system: StateSpaceSystem, realified: bool) -> Self {
        let order = system.order();
        ReducedModel {
            system,
            order,
            realified,
        }
    }

    /// An exact copy of a full system, viewed as a reduced model of itself.
    pub fn copy_of(full: &StateSpaceSystem) -> Self {
        ReducedModel::new(full.clone(), false)
    }
}

/// `g(t) = sum_k c_k b_k^* e^{lambda_k t}`.
#[derive(Debug, Clone)]
pub struct PoleResidueForm {
    pub poles: Vec<Complex64>,
    pub right_residue_directions: Vec<CVector>,
    pub left_residue_directions: Vec<CVector>,
}

impl PoleResidueForm {
    pub fn impulse_response(&self, t: f64) -> CMatrix {
        let p = self.left_residue_directions[0].len();
        let m = self.right_residue_directions[0].len();
        let mut g = CMatrix::zeros(p, m);
        for ((lam, b), c) in self
            .poles
            .iter()
            .zip(&self.right_residue_directions)
            .zip(&self.left_residue_directions)
        {
            g += c * b.adjoint() * (lam * t).exp();
        }
        g
    }

    /// Tangential interpolation data at the reflected poles: shift
    /// `-lambda_k` paired with `conj(b_k)` on the right and `c_k` on the left.
    pub fn reflected_data(&self) -> (Vec<Complex64>, Vec<CVector>, Vec<CVector>) {
        let shifts = self.poles.iter().map(|l| -l).collect();
        let right = self
            .right_residue_directions
            .iter()
            .map(|b| b.map(|x| x.conj()))
            .collect();
        (shifts, right, self.left_residue_directions.clone())
    }
}

pub fn pole_residue(model: &ReducedModel) -> Result<PoleResidueForm> {
    let sys = &model.system;
    let eig = eigendecompose(&sys.a)?;
    let rb = &eig.inverse_right_vectors * to_complex(&sys.b);
    let cr = to_complex(&sys.c) * &eig.right_vectors;
    let r = sys.order();
    let right = (0..r).map(|k| rb.row(k).adjoint()).collect();
    let left = (0..r).map(|k| cr.column(k).into_owned()).collect();
    Ok(PoleResidueForm {
        poles: eig.values,
        right_residue_directions: right,
        left_residue_directions: left,
    })
}

/// `G(s) = C (sI - A)^{-1} B`.
pub fn transfer(sys: &StateSpaceSystem, s: Complex64) -> Result<CMatrix> {
    let x = shifted_solve(&sys.a, s, &to_complex(&sys.b))?;
    Ok(to_complex(&sys.c) * x)
}

fn shifted_state_matrix(a: &DMatrix<f64>, s: Complex64) -> CMatrix {
    let mut m = to_complex(a);
    for i in 0..a.nrows() {
        m[(i, i)] -= s;
    }
    m
}

/// `G_tau(s) = G(s) - e^{-s tau} C (sI - A)^{-1} e^{A tau} B`, with the decaying
/// factor evaluated as the single exponential `e^{(A - sI) tau}`.
pub fn transfer_limited(sys: &StateSpaceSystem, s: Complex64, tau: f64) -> Result<CMatrix> {
    check_tau(tau)?;
    let b = to_complex(&sys.b);
    let decayed = exp_action(&shifted_state_matrix(&sys.a, s), tau, &b)?;
    let x = shifted_solve(&sys.a, s, &(&b - decayed))?;
    Ok(to_complex(&sys.c) * x)
}

/// Same quantity with the exponential applied after the resolvent:
/// `G(s) - e^{-s tau} C e^{A tau} (sI - A)^{-1} B`.
pub fn transfer_limited_alt(sys: &StateSpaceSystem, s: Complex64, tau: f64) -> Result<CMatrix> {
    check_tau(tau)?;
    let x = shifted_solve(&sys.a, s, &to_complex(&sys.b))?;
    let decayed = exp_action(&shifted_state_matrix(&sys.a, s), tau, &x)?;
    Ok(to_complex(&sys.c) * (x - decayed))
}

/// `dG_tau/ds = -C(sI-A)^{-2}B + e^{-s tau}(tau C(sI-A)^{-1} + C(sI-A)^{-2}) e^{A tau} B`.
pub fn transfer_limited_derivative(
    sys: &StateSpaceSystem,
    s: Complex64,
    tau: f64,
) -> Result<CMatrix> {
    check_tau(tau)?;
    let b = to_complex(&sys.b);
    let decayed = exp_action(&shifted_state_matrix(&sys.a, s), tau, &b)?;
    // x = (sI-A)^{-1}(B - e^{-s tau}e^{A tau}B); G_tau' = C (sI-A)^{-1}(tau*decayed - x)
    let x = shifted_solve(&sys.a, s, &(&b - &decayed))?;
    let inner = decayed * Complex64::new(tau, 0.0) - x;
    let y = shifted_solve(&sys.a, s, &inner)?;
    let out = to_complex(&sys.c) * y;
    debug_assert!(derivative_self_check(sys, s, tau, &out));
    Ok(out)
}

fn derivative_self_check(sys: &StateSpaceSystem, s: Complex64, tau: f64, value: &CMatrix) -> bool {
    if sys.order() > 64 {
        return true;
    }
    let h = 1e-5 * s.norm().max(1.0);
    let step = Complex64::new(h, 0.0);
    let (Ok(up), Ok(down)) = (
        transfer_limited(sys, s + step, tau),
        transfer_limited(sys, s - step, tau),
    ) else {
        return true;
    };
    let fd = (up - down) / Complex64::new(2.0 * h, 0.0);
    let scale = value.norm().max(fd.norm()).max(1e-300);
    (fd - value).norm() <= 1e-3 * scale + 1e-8
}

/// `g(t) = C e^{At} B`.
pub fn impulse_response(sys: &StateSpaceSystem, t: f64) -> Result<DMatrix<f64>> {
    Ok(&sys.c * exp_action(&sys.a, t, &sys.b)?)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(MorError::InvalidConfig(format!(
            "time horizon must be positive and finite, got {tau}"
        )))
    }
}

/// A system prepared for many shifted evaluations at a fixed horizon.
///
/// Holds the Hessenberg resolvent of `A` and the blocks `e^{A tau} B` and
/// `C e^{A tau}`, so each shift costs O(n^2). With `horizon = None` the
/// time-limiting terms vanish and the evaluator reproduces the standard
/// transfer function.
#[derive(Debug, Clone)]
pub struct TimeLimitedSystem<'a> {
    pub system: &'a StateSpaceSystem,
    pub horizon: Option<f64>,
    resolvent: HessenbergResolvent,
    propagated_input: Option<DMatrix<f64>>,
    propagated_output: Option<DMatrix<f64>>,
}

impl<'a> TimeLimitedSystem<'a> {
    pub fn new(system: &'a StateSpaceSystem, horizon: Option<f64>) -> Result<Self> {
        if let Some(tau) = horizon {
            check_tau(tau)?;
        }
        let resolvent = HessenbergResolvent::new(&system.a);
        let (propagated_input, propagated_output) = match horizon {
            Some(tau) => match matrix_exponential(&(&system.a * tau)) {
                Ok(e) => (Some(&e * &system.b), Some(&system.c * &e)),
                // Fall back to per-shift shifted exponentials.
                Err(MorError::OverflowRisk { .. }) => (None, None),
                Err(e) => return Err(e),
            },
            None => (None, None),
        };
        Ok(TimeLimitedSystem {
            system,
            horizon,
            resolvent,
            propagated_input,
            propagated_output,
        })
    }

    pub fn resolvent(&self) -> &HessenbergResolvent {
        &self.resolvent
    }

    /// `e^{-sigma tau} e^{A tau} B b`, or zero without a horizon.
    pub fn decayed_input(&self, sigma: Complex64, b: &CVector) -> Result<CVector> {
        let n = self.system.order();
        let Some(tau) = self.horizon else {
            return Ok(CVector::zeros(n));
        };
        match &self.propagated_input {
            Some(eb) => Ok(scaled_decay(real_times_complex(eb, &to_col(b)), sigma, tau)),
            None => {
                let bb = real_times_complex(&self.system.b, &to_col(b));
                let x = exp_action(&shifted_state_matrix(&self.system.a, sigma), tau, &bb)?;
                Ok(x.column(0).into_owned())
            }
        }
    }

    /// `e^{-sigma tau} e^{A^T tau} C^T c`, or zero without a horizon.
    pub fn decayed_output(&self, sigma: Complex64, c: &CVector) -> Result<CVector> {
        let n = self.system.order();
        let Some(tau) = self.horizon else {
            return Ok(CVector::zeros(n));
        };
        match &self.propagated_output {
            Some(ce) => Ok(scaled_decay(
                real_times_complex(&ce.transpose(), &to_col(c)),
                sigma,
                tau,
            )),
            None => {
                let ct = real_times_complex(&self.system.c.transpose(), &to_col(c));
                let at = self.system.a.transpose();
                let x = exp_action(&shifted_state_matrix(&at, sigma), tau, &ct)?;
                Ok(x.column(0).into_owned())
            }
        }
    }

    /// `(sigma I - A)^{-1} (I - e^{-sigma tau} e^{A tau}) B b`.
    pub fn right_vector(&self, sigma: Complex64, b: &CVector) -> Result<CVector> {
        let bb = real_times_complex(&self.system.b, &to_col(b)).column(0).into_owned();
        let rhs = bb - self.decayed_input(sigma, b)?;
        Ok(self.resolvent.solve(sigma, &to_col(&rhs))?.column(0).into_owned())
    }

    /// `(sigma I - A^T)^{-1} (I - e^{-sigma tau} e^{A^T tau}) C^T c`.
    pub fn left_vector(&self, sigma: Complex64, c: &CVector) -> Result<CVector> {
        let ct = real_times_complex(&self.system.c.transpose(), &to_col(c))
            .column(0)
            .into_owned();
        let rhs = ct - self.decayed_output(sigma, c)?;
        Ok(self
            .resolvent
            .solve_transpose(sigma, &to_col(&rhs))?
            .column(0)
            .into_owned())
    }

    /// `G_tau(sigma) b`.
    pub fn apply_right(&self, sigma: Complex64, b: &CVector) -> Result<CVector> {
        let x = self.right_vector(sigma, b)?;
        Ok(real_times_complex(&self.system.c, &to_col(&x)).column(0).into_owned())
    }

    /// `c^T G_tau(sigma)`, returned as a column of length m.
    pub fn apply_left(&self, sigma: Complex64, c: &CVector) -> Result<CVector> {
        let y = self.left_vector(sigma, c)?;
        Ok(real_times_complex(&self.system.b.transpose(), &to_col(&y))
            .column(0)
            .into_owned())
    }

    /// `c^T G_tau'(sigma) b`.
    pub fn bitangential_derivative(
        &self,
        sigma: Complex64,
        b: &CVector,
        c: &CVector,
    ) -> Result<Complex64> {
        let lu = self.resolvent.factor(sigma)?;
        let bb = real_times_complex(&self.system.b, &to_col(b)).column(0).into_owned();
        let decayed = self.decayed_input(sigma, b)?;
        let x = lu.solve(&to_col(&(bb - &decayed)))?;
        let tau = self.horizon.unwrap_or(0.0);
        let inner = to_col(&decayed) * Complex64::new(tau, 0.0) - x;
        let y = lu.solve(&inner)?;
        let cy = real_times_complex(&self.system.c, &y);
        Ok(c.dot(&cy.column(0)))
    }
}

fn to_col(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// `e^{-sigma tau} x`, with the scalar folded into the log of `||x||` so the
/// product neither underflows nor overflows prematurely.
fn scaled_decay(x: CMatrix, sigma: Complex64, tau: f64) -> CVector {
    let col: CVector = x.column(0).into_owned();
    let norm = col.norm();
    if norm == 0.0 {
        return col;
    }
    let log_mag = norm.ln() - sigma.re * tau;
    let phase = Complex64::new(0.0, -sigma.im * tau).exp();
    let factor = phase * log_mag.exp();
    col.map(|v| v / norm * factor)
}

/// Convenience: a complex column vector from real entries.
pub fn real_vector(values: &[f64]) -> CVector {
    DVector::from_iterator(values.len(), values.iter().map(|&x| Complex64::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn first_order() -> StateSpaceSystem {
        StateSpaceSystem::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], "lag").unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let r = StateSpaceSystem::new(
            DMatrix::identity(2, 2),
            dmatrix![1.0; 1.0; 1.0],
            dmatrix![1.0, 1.0],
            "bad",
        );
        assert!(matches!(r, Err(MorError::DimensionMismatch(_))));
        let r = StateSpaceSystem::new(dmatrix![f64::NAN], dmatrix![1.0], dmatrix![1.0], "nan");
        assert!(matches!(r, Err(MorError::NonFinite(_))));
    }

    #[test]
    fn dc_gain_and_unit_frequency() {
        let sys = first_order();
        assert!((transfer(&sys, c(0.0, 0.0)).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((transfer(&sys, c(1.0, 0.0)).unwrap()[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn limited_transfer_scalar_integral() {
        let g = transfer_limited(&first_order(), c(0.0, 0.0), 1.0).unwrap()[(0, 0)];
        assert!((g - c(1.0 - (-1f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn limited_derivative_scalar() {
        let sys = first_order();
        let d = transfer_limited_derivative(&sys, c(0.0, 0.0), 1.0).unwrap()[(0, 0)];
        let exact = -1.0 + 2.0 * (-1f64).exp();
        assert!((d - c(exact, 0.0)).norm() < 1e-14);
        let d_long = transfer_limited_derivative(&sys, c(0.0, 0.0), 60.0).unwrap()[(0, 0)];
        assert!((d_long - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn impulse_response_scalar() {
        let sys = first_order();
        assert!((impulse_response(&sys, 0.0).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((impulse_response(&sys, 1.0).unwrap()[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn pole_residue_of_diagonal_model() {
        let sys = StateSpaceSystem::new(
            dmatrix![-1.0, 0.0; 0.0, -2.0],
            dmatrix![1.0; 1.0],
            dmatrix![1.0, 1.0],
            "diag",
        )
        .unwrap();
        let pr = pole_residue(&ReducedModel::copy_of(&sys)).unwrap();
        assert!((pr.poles[0] - c(-2.0, 0.0)).norm() < 1e-14);
        assert!((pr.poles[1] - c(-1.0, 0.0)).norm() < 1e-14);
        for k in 0..2 {
            let prod = pr.left_residue_directions[k][0] * pr.right_residue_directions[k][0].conj();
            assert!((prod - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn pole_residue_conjugate_closure() {
        // eigenvalues -1 +- 2i
        let sys = StateSpaceSystem::new(
            dmatrix![-1.0, 2.0; -2.0, -1.0],
            dmatrix![1.0; 0.5],
            dmatrix![0.3, 1.0],
            "osc",
        )
        .unwrap();
        let pr = pole_residue(&ReducedModel::copy_of(&sys)).unwrap();
        assert!((pr.poles[0] - pr.poles[1].conj()).norm() == 0.0);
        let b0 = &pr.right_residue_directions[0];
        let b1 = &pr.right_residue_directions[1];
        assert!((b0.map(|x| x.conj()) - b1).norm() < 1e-15);
        for &t in &[0.0, 0.4, 2.0] {
            let g = impulse_response(&sys, t).unwrap();
            let h = pr.impulse_response(t);
            assert!((h[(0, 0)].re - g[(0, 0)]).abs() < 1e-13);
            assert!(h[(0, 0)].im.abs() < 1e-14);
        }
    }

    #[test]
    fn evaluator_matches_free_functions() {
        let sys = StateSpaceSystem::new(
            dmatrix![-1.0, 2.0, 0.0; -2.0, -1.0, 0.5; 0.1, 0.0, -3.0],
            dmatrix![1.0, 0.0; 0.5, 1.0; 0.0, -1.0],
            dmatrix![0.3, 1.0, 0.0; 1.0, 0.0, 2.0],
            "mimo",
        )
        .unwrap();
        let tau = 0.7;
        let ev = TimeLimitedSystem::new(&sys, Some(tau)).unwrap();
        let s = c(0.4, 1.3);
        let b = real_vector(&[0.6, -0.8]);
        let cvec = CVector::from_vec(vec![c(0.2, 0.1), c(-1.0, 0.5)]);
        let g = transfer_limited(&sys, s, tau).unwrap();
        assert!((ev.apply_right(s, &b).unwrap() - &g * &b).norm() < 1e-13);
        let left = (cvec.transpose() * &g).transpose();
        assert!((ev.apply_left(s, &cvec).unwrap() - left).norm() < 1e-13);
        let gd = transfer_limited_derivative(&sys, s, tau).unwrap();
        let want = (cvec.transpose() * gd * &b)[(0, 0)];
        assert!((ev.bitangential_derivative(s, &b, &cvec).unwrap() - want).norm() < 1e-13);
    }

    #[test]
    fn evaluator_without_horizon_is_standard_transfer() {
        let sys = first_order();
        let ev = TimeLimitedSystem::new(&sys, None).unwrap();
        let g = ev.apply_right(c(1.0, 0.0), &real_vector(&[1.0])).unwrap();
        assert!((g[0] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decay_with_large_positive_shift_underflows_cleanly() {
        let sys = first_order();
        let ev = TimeLimitedSystem::new(&sys, Some(2.0)).unwrap();
        let d = ev.decayed_input(c(527.0, 0.0), &real_vector(&[1.0])).unwrap();
        assert!(d[0].norm() < 1e-300);
        let g = ev.apply_right(c(527.0, 0.0), &real_vector(&[1.0])).unwrap();
        assert!((g[0] - c(1.0 / 528.0, 0.0)).norm() < 1e-17);
    }
}
