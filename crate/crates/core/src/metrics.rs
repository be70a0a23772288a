//! H2(tau) norms and errors, the inner-product identities behind the
//! optimality conditions, and the per-shift optimality residuals.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::numerics::quadrature::{gauss_legendre_unit, simpson_refined};
use crate::numerics::{
    exp_action, matrix_exponential, norm1, taylor_action, to_complex, vanloan_limited_gramian,
    CVector,
};
use crate::system::{
    pole_residue, transfer_limited, transfer_limited_derivative, ReducedModel, StateSpaceSystem,
    TimeLimitedSystem,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H2TauError {
    pub absolute: f64,
    pub relative: f64,
    pub tau: f64,
    pub full_norm: f64,
}

/// `||g||_{H2(tau)} = sqrt(trace(C P_tau C^T))`.
pub fn h2tau_norm(sys: &StateSpaceSystem, tau: f64) -> Result<f64> {
    let p = vanloan_limited_gramian(&sys.a, &sys.b, tau)?;
    let energy = (&sys.c * p * sys.c.transpose()).trace();
    Ok(energy.max(0.0).sqrt())
}

/// Gauss-Legendre nodes per panel in the error quadrature.
const PANEL_NODES: usize = 12;
/// Panels are sized so that `||A||_1 h` stays below this.
const PANEL_SPREAD: f64 = 2.0;
const MAX_PANELS: usize = 20_000;

/// Samples `C e^{At} B` at every quadrature node of a uniform panel grid by
/// stepping the node states with the one-panel propagator `e^{Ah}`.
struct PanelPropagator {
    step: DMatrix<f64>,
    states: DMatrix<f64>,
    c: DMatrix<f64>,
    inputs: usize,
}

impl PanelPropagator {
    fn new(sys: &StateSpaceSystem, h: f64, nodes: &[f64]) -> Result<Self> {
        let n = sys.order();
        let m = sys.inputs();
        let ah = &sys.a * h;
        let step = matrix_exponential(&ah)?;
        let mut states = DMatrix::<f64>::zeros(n, m * nodes.len());
        let small = norm1(&ah) <= PANEL_SPREAD;
        for (j, &x) in nodes.iter().enumerate() {
            let block = if small {
                taylor_action(&(&ah * x), &sys.b)
            } else {
                exp_action(&ah, x, &sys.b)?
            };
            states.view_mut((0, j * m), (n, m)).copy_from(&block);
        }
        Ok(PanelPropagator {
            step,
            states,
            c: sys.c.clone(),
            inputs: m,
        })
    }

    /// Impulse response at every node of the current panel, side by side.
    fn outputs(&self) -> DMatrix<f64> {
        &self.c * &self.states
    }

    fn advance(&mut self) {
        self.states = &self.step * &self.states;
    }
}

/// `(int_0^tau ||g - g_r||_F^2 dt, int_0^tau ||g||_F^2 dt)` by composite
/// Gauss-Legendre on uniform panels.
fn error_energy(full: &StateSpaceSystem, reduced: &StateSpaceSystem, tau: f64) -> Result<(f64, f64)> {
    let spread = norm1(&full.a).max(norm1(&reduced.a)) * tau;
    let panels = ((spread / PANEL_SPREAD).ceil() as usize).clamp(8, MAX_PANELS);
    let h = tau / panels as f64;
    let (nodes, weights) = gauss_legendre_unit(PANEL_NODES);
    let mut big = PanelPropagator::new(full, h, &nodes)?;
    let mut small = PanelPropagator::new(reduced, h, &nodes)?;
    let m = big.inputs;
    let mut err = 0.0;
    let mut energy = 0.0;
    for _ in 0..panels {
        let g = big.outputs();
        let gr = small.outputs();
        for (j, w) in weights.iter().enumerate() {
            let gj = g.view((0, j * m), (g.nrows(), m));
            let grj = gr.view((0, j * m), (gr.nrows(), m));
            err += w * (gj - grj).norm_squared();
            energy += w * gj.norm_squared();
        }
        big.advance();
        small.advance();
    }
    if !(err.is_finite() && energy.is_finite()) {
        return Err(MorError::OverflowRisk {
            detail: format!("impulse-response energy over [0, {tau}] overflowed"),
        });
    }
    Ok((err * h, energy * h))
}

/// `||g - g_r||_{H2(tau)}`, absolute and relative to `||g||_{H2(tau)}`.
///
/// Both integrals come from one quadrature pass over the impulse responses
/// rather than from the error system's Gramian: the Gramian trace subtracts
/// nearly equal quantities, which caps the attainable relative accuracy near
/// `sqrt(eps)` -- far above the errors good reduced models reach.
pub fn h2tau_error(full: &StateSpaceSystem, reduced: &ReducedModel, tau: f64) -> Result<H2TauError> {
    check_compatible(full, &reduced.system)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(MorError::InvalidConfig(format!(
            "time horizon must be positive and finite, got {tau}"
        )));
    }
    let (err, energy) = error_energy(full, &reduced.system, tau)?;
    let absolute = err.max(0.0).sqrt();
    let full_norm = energy.max(0.0).sqrt();
    let relative = if full_norm > 0.0 {
        absolute / full_norm
    } else {
        absolute
    };
    Ok(H2TauError {
        absolute,
        relative,
        tau,
        full_norm,
    })
}

fn check_compatible(full: &StateSpaceSystem, reduced: &StateSpaceSystem) -> Result<()> {
    if full.inputs() != reduced.inputs() || full.outputs() != reduced.outputs() {
        return Err(MorError::DimensionMismatch(format!(
            "full system is {}x{} (outputs x inputs), reduced is {}x{}",
            full.outputs(),
            full.inputs(),
            reduced.outputs(),
            reduced.inputs()
        )));
    }
    Ok(())
}

/// `||g(t) - g_r(t)||_F` on `points` uniformly spaced times in `[0, tau]`.
pub fn error_trajectory(
    full: &StateSpaceSystem,
    reduced: &ReducedModel,
    tau: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    check_compatible(full, &reduced.system)?;
    let points = points.max(2);
    let dt = tau / (points - 1) as f64;
    let step = matrix_exponential(&(&full.a * dt))?;
    let step_r = matrix_exponential(&(&reduced.system.a * dt))?;
    let mut x = full.b.clone();
    let mut xr = reduced.system.b.clone();
    let mut out = Vec::with_capacity(points);
    for k in 0..points {
        let e = &full.c * &x - &reduced.system.c * &xr;
        out.push((k as f64 * dt, e.norm()));
        x = &step * x;
        xr = &step_r * xr;
    }
    Ok(out)
}

const QUADRATURE_TOL: f64 = 1e-10;
const QUADRATURE_MAX_PANELS: usize = 1 << 20;

fn impulse_sampler<'a>(
    sys: &'a StateSpaceSystem,
    tau: f64,
    panels: usize,
) -> impl FnMut(usize, f64) -> DMatrix<f64> + 'a {
    let h = tau / (panels + panels % 2).max(2) as f64;
    // A failed exponential poisons the estimate instead of being hidden.
    let step = matrix_exponential(&(&sys.a * h))
        .unwrap_or_else(|_| DMatrix::from_element(sys.order(), sys.order(), f64::NAN));
    let mut x = sys.b.clone();
    move |k, _t| {
        if k > 0 {
            x = &step * &x;
        }
        &sys.c * &x
    }
}

/// Bilinear form `c^* M b` for a complex matrix `M`.
fn sandwich(c: &CVector, m: &nalgebra::DMatrix<Complex64>, b: &CVector) -> Complex64 {
    (c.adjoint() * m * b)[(0, 0)]
}

fn check_directions(sys: &StateSpaceSystem, b: &CVector, c: &CVector) -> Result<()> {
    if b.len() != sys.inputs() || c.len() != sys.outputs() {
        return Err(MorError::DimensionMismatch(format!(
            "directions of length {} and {} for a system with {} inputs and {} outputs",
            b.len(),
            c.len(),
            sys.inputs(),
            sys.outputs()
        )));
    }
    Ok(())
}

/// `<g, c b^* e^{mu t}>_{H2(tau)}` two ways: quadrature of
/// `int_0^tau c^* g(t) b e^{conj(mu) t} dt`, and `c^* conj(G_tau(-mu)) b`.
pub fn prop1_inner_product_identity(
    sys: &StateSpaceSystem,
    mu: Complex64,
    b: &CVector,
    c: &CVector,
    tau: f64,
) -> Result<(Complex64, Complex64)> {
    check_directions(sys, b, c)?;
    let lhs = simpson_refined(tau, QUADRATURE_TOL, QUADRATURE_MAX_PANELS, |panels| {
        let mut g = impulse_sampler(sys, tau, panels);
        move |k, t| sandwich(c, &to_complex(&g(k, t)), b) * (mu.conj() * t).exp()
    });
    let gt = transfer_limited(sys, -mu, tau)?;
    let rhs = sandwich(c, &gt.map(|x| x.conj()), b);
    Ok((lhs, rhs))
}

/// `||c b^* e^{mu t}||_{H2(tau)}` by quadrature and by the closed form
/// `||b|| ||c|| sqrt(|1 - e^{2 tau Re mu}| / (2 |Re mu|))`.
pub fn prop1_norm_identity(b: &CVector, c: &CVector, mu: Complex64, tau: f64) -> Result<(f64, f64)> {
    if mu.re.abs() < 1e-12 {
        return Err(MorError::DegenerateShift { real_part: mu.re });
    }
    let scale = b.norm() * c.norm();
    let lhs_sq = simpson_refined(tau, QUADRATURE_TOL, QUADRATURE_MAX_PANELS, |_| {
        move |_, t: f64| {
            let g = c * b.adjoint() * (mu * t).exp();
            Complex64::new(g.norm_squared(), 0.0)
        }
    });
    let lhs = lhs_sq.re.max(0.0).sqrt();
    let rhs = scale * ((1.0 - (2.0 * tau * mu.re).exp()).abs() / (2.0 * mu.re.abs())).sqrt();
    Ok((lhs, rhs))
}

/// `<g, c b^* t e^{mu t}>_{H2(tau)}` by quadrature and as
/// `-c^* conj(G_tau'(-mu)) b`.
pub fn prop1_derivative_identity(
    sys: &StateSpaceSystem,
    mu: Complex64,
    b: &CVector,
    c: &CVector,
    tau: f64,
) -> Result<(Complex64, Complex64)> {
    check_directions(sys, b, c)?;
    let lhs = simpson_refined(tau, QUADRATURE_TOL, QUADRATURE_MAX_PANELS, |panels| {
        let mut g = impulse_sampler(sys, tau, panels);
        move |k, t| sandwich(c, &to_complex(&g(k, t)), b) * (mu.conj() * t).exp() * t
    });
    let gd = transfer_limited_derivative(sys, -mu, tau)?;
    let rhs = -sandwich(c, &gd.map(|x| x.conj()), b);
    Ok((lhs, rhs))
}

/// Relative interpolation mismatches at the reflected reduced poles.
/// `None` marks an entry whose reference quantity vanished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityResiduals {
    pub shifts: Vec<Complex64>,
    pub right_tangential: Vec<Option<f64>>,
    pub left_tangential: Vec<Option<f64>>,
    pub bitangential: Vec<Option<f64>>,
}

impl OptimalityResiduals {
    pub fn max_right(&self) -> Option<f64> {
        max_defined(&self.right_tangential)
    }

    pub fn max_left(&self) -> Option<f64> {
        max_defined(&self.left_tangential)
    }

    pub fn max_bitangential(&self) -> Option<f64> {
        max_defined(&self.bitangential)
    }

    /// Largest defined entry over all three vectors.
    pub fn max_any(&self) -> Option<f64> {
        [self.max_right(), self.max_left(), self.max_bitangential()]
            .into_iter()
            .flatten()
            .reduce(f64::max)
    }
}

fn max_defined(v: &[Option<f64>]) -> Option<f64> {
    v.iter().flatten().copied().reduce(f64::max)
}

const ZERO_REFERENCE: f64 = 1e-300;

fn relative(diff: f64, reference: f64) -> Option<f64> {
    if reference < ZERO_REFERENCE {
        None
    } else {
        Some(diff / reference)
    }
}

pub fn optimality_residuals(
    full: &StateSpaceSystem,
    reduced: &ReducedModel,
    tau: f64,
) -> Result<OptimalityResiduals> {
    let ev = TimeLimitedSystem::new(full, Some(tau))?;
    optimality_residuals_with(&ev, reduced)
}

/// As [`optimality_residuals`], reusing a prepared full-order evaluator.
///
/// At shift `sigma_k = -lambda_k` the right direction is `conj(b_k)` and the
/// left direction is `c_k`, with the left conditions written as `c^T G`.
/// For a real system these are the complex conjugates of the conditions at
/// `-conj(lambda_k)` with directions `b_k`, `c_k^*`, so the magnitudes agree.
pub fn optimality_residuals_with(
    full: &TimeLimitedSystem<'_>,
    reduced: &ReducedModel,
) -> Result<OptimalityResiduals> {
    check_compatible(full.system, &reduced.system)?;
    let pr = pole_residue(reduced)?;
    let rom = TimeLimitedSystem::new(&reduced.system, full.horizon)?;
    let (shifts, rights, lefts) = pr.reflected_data();
    let mut out = OptimalityResiduals {
        shifts: shifts.clone(),
        right_tangential: Vec::with_capacity(shifts.len()),
        left_tangential: Vec::with_capacity(shifts.len()),
        bitangential: Vec::with_capacity(shifts.len()),
    };
    for ((&s, b), c) in shifts.iter().zip(&rights).zip(&lefts) {
        let g = full.apply_right(s, b)?;
        let gr = rom.apply_right(s, b)?;
        out.right_tangential.push(relative((&g - gr).norm(), g.norm()));
        let l = full.apply_left(s, c)?;
        let lr = rom.apply_left(s, c)?;
        out.left_tangential.push(relative((&l - lr).norm(), l.norm()));
        let d = full.bitangential_derivative(s, b, c)?;
        let dr = rom.bitangential_derivative(s, b, c)?;
        out.bitangential.push(relative((d - dr).norm(), d.norm()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::real_vector;
    use nalgebra::dmatrix;

    fn lag() -> StateSpaceSystem {
        StateSpaceSystem::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], "lag").unwrap()
    }

    #[test]
    fn scalar_norms() {
        assert!((h2tau_norm(&lag(), 60.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        let integ =
            StateSpaceSystem::new(dmatrix![0.0], dmatrix![1.0], dmatrix![1.0], "int").unwrap();
        assert!((h2tau_norm(&integ, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn self_error_vanishes_and_zero_model_is_total_error() {
        let sys = lag();
        let e = h2tau_error(&sys, &ReducedModel::copy_of(&sys), 1.0).unwrap();
        assert_eq!(e.absolute, 0.0);
        let zero = StateSpaceSystem::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![0.0], "z").unwrap();
        let e = h2tau_error(&sys, &ReducedModel::new(zero, false), 1.0).unwrap();
        assert!((e.relative - 1.0).abs() < 1e-12);
        let exact = ((1.0 - (-2f64).exp()) / 2.0).sqrt();
        assert!((e.full_norm - exact).abs() < 1e-13);
    }

    #[test]
    fn scalar_inner_product_identity() {
        let one = real_vector(&[1.0]);
        let (l, r) =
            prop1_inner_product_identity(&lag(), Complex64::new(-1.0, 0.0), &one, &one, 1.0)
                .unwrap();
        let exact = (1.0 - (-2f64).exp()) / 2.0;
        assert!((l.re - exact).abs() < 1e-10);
        assert!((r.re - exact).abs() < 1e-14);
    }

    #[test]
    fn scalar_derivative_identity() {
        let one = real_vector(&[1.0]);
        let (l, r) =
            prop1_derivative_identity(&lag(), Complex64::new(-1.0, 0.0), &one, &one, 1.0).unwrap();
        let exact = (1.0 - 3.0 * (-2f64).exp()) / 4.0;
        assert!((l.re - exact).abs() < 1e-10);
        assert!((r.re - exact).abs() < 1e-14);
    }

    #[test]
    fn norm_identity_rejects_imaginary_axis() {
        let one = real_vector(&[1.0]);
        assert!(matches!(
            prop1_norm_identity(&one, &one, Complex64::new(0.0, 2.0), 1.0),
            Err(MorError::DegenerateShift { .. })
        ));
        let (l, r) = prop1_norm_identity(&one, &one, Complex64::new(-1.0, 0.0), 1.0).unwrap();
        assert!((l - r).abs() < 1e-10);
    }

    #[test]
    fn exact_copy_has_zero_residuals() {
        let sys = StateSpaceSystem::new(
            dmatrix![-1.0, 2.0; -2.0, -1.0],
            dmatrix![1.0; 0.5],
            dmatrix![0.3, 1.0],
            "osc",
        )
        .unwrap();
        let res = optimality_residuals(&sys, &ReducedModel::copy_of(&sys), 0.5).unwrap();
        assert_eq!(res.shifts.len(), 2);
        assert!(res.max_any().unwrap() < 1e-12);
    }
}
