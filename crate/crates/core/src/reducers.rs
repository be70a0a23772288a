//! Fixed-point reduction drivers: LT-IRKA, IRKA and TL-TSIA.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::numerics::{
    canonical_cmp, completed_orthonormal_basis, eigendecompose, exp_action, matrix_exponential, shifted_solve, to_complex,
    CMatrix, CVector,
};
use crate::projectors::{build_spaces_completed, petrov_galerkin, InterpolationData, ProjectionPair};
use crate::system::{pole_residue, ReducedModel, StateSpaceSystem, TimeLimitedSystem};

pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone)]
pub enum Initialization {
    /// Seeded random shifts and directions.
    Random,
    /// Reflected poles and residue directions of an existing model.
    FromModel(Box<ReducedModel>),
    /// Explicit interpolation data.
    FromData(InterpolationData),
}

#[derive(Debug, Clone)]
pub struct ReductionConfig {
    pub reduced_order: usize,
    /// Horizon of the limited-time problem; ignored by IRKA.
    pub tau: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub initialization: Initialization,
}

impl ReductionConfig {
    pub fn new(reduced_order: usize) -> Self {
        ReductionConfig {
            reduced_order,
            tau: None,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
            initialization: Initialization::Random,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_initialization(mut self, initialization: Initialization) -> Self {
        self.initialization = initialization;
        self
    }

    fn validate(&self, sys: &StateSpaceSystem, needs_tau: bool) -> Result<()> {
        let n = sys.order();
        if self.reduced_order == 0 || self.reduced_order > n {
            return Err(MorError::InvalidConfig(format!(
                "reduced order {} outside 1..={n}",
                self.reduced_order
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(MorError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(MorError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if needs_tau {
            match self.tau {
                Some(t) if t > 0.0 && t.is_finite() => {}
                Some(t) => {
                    return Err(MorError::InvalidConfig(format!(
                        "time horizon must be positive and finite, got {t}"
                    )))
                }
                None => return Err(MorError::InvalidConfig("a time horizon is required".into())),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Shifts used to build this iterate's spaces, canonically sorted.
    pub shifts: Vec<Complex64>,
    /// Relative change from these shifts to the reflected poles of the
    /// resulting model.
    pub shift_change: f64,
    pub projection_condition: f64,
    /// Numerical rank of the defining vectors; below the reduced order when
    /// the spaces had to be completed.
    pub numerical_rank: usize,
    /// Relative residual of the time-limited Sylvester equation (TL-TSIA only).
    pub sylvester_residual: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceStatus {
    Converged,
    MaxIterations,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub status: TraceStatus,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn converged(&self) -> bool {
        self.status == TraceStatus::Converged
    }

    pub fn last_change(&self) -> Option<f64> {
        self.records.last().map(|r| r.shift_change)
    }
}

/// `||current - previous||_2 / ||previous||_2` after sorting both sets by
/// (real, imaginary); absolute when `previous` is all zeros.
pub fn shift_change_metric(previous: &[Complex64], current: &[Complex64]) -> Result<f64> {
    if previous.len() != current.len() {
        return Err(MorError::DimensionMismatch(format!(
            "shift sets of sizes {} and {}",
            previous.len(),
            current.len()
        )));
    }
    let mut p = previous.to_vec();
    let mut c = current.to_vec();
    p.sort_by(canonical_cmp);
    c.sort_by(canonical_cmp);
    let diff: f64 = p.iter().zip(&c).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let base: f64 = p.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Ok(if base > 0.0 { diff / base } else { diff })
}

/// Seeded random interpolation data: real shifts log-uniform in
/// `[0.1, 1000]` and, when `pairs > 0`, that many conjugate pairs with
/// log-uniform modulus and angle uniform in `(0, pi/2)`. Directions are
/// uniform on the unit sphere, conjugated along with their shifts.
pub fn random_interpolation_data(
    r: usize,
    inputs: usize,
    outputs: usize,
    pairs: usize,
    seed: u64,
) -> Result<InterpolationData> {
    random_interpolation_data_in(r, inputs, outputs, pairs, (0.1, 1e3), seed)
}

/// As [`random_interpolation_data`] with moduli log-uniform in `range`.
pub fn random_interpolation_data_in(
    r: usize,
    inputs: usize,
    outputs: usize,
    pairs: usize,
    range: (f64, f64),
    seed: u64,
) -> Result<InterpolationData> {
    let pairs = pairs.min(r / 2);
    let (lo, hi) = (range.0.log10(), range.1.log10());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shifts = Vec::with_capacity(r);
    let mut right = Vec::with_capacity(r);
    let mut left = Vec::with_capacity(r);
    let modulus = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(lo..hi));
    for _ in 0..pairs {
        let rho = modulus(&mut rng);
        let theta = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let s = Complex64::from_polar(rho, theta);
        let b = unit_vector(&mut rng, inputs, true);
        let c = unit_vector(&mut rng, outputs, true);
        shifts.push(s);
        right.push(b.clone());
        left.push(c.clone());
        shifts.push(s.conj());
        right.push(b.map(|x| x.conj()));
        left.push(c.map(|x| x.conj()));
    }
    while shifts.len() < r {
        shifts.push(Complex64::new(modulus(&mut rng), 0.0));
        right.push(unit_vector(&mut rng, inputs, false));
        left.push(unit_vector(&mut rng, outputs, false));
    }
    InterpolationData::new(shifts, right, left)
}

fn unit_vector(rng: &mut ChaCha8Rng, len: usize, complex: bool) -> CVector {
    let mut v = CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
        Complex64::new(re, im)
    });
    let norm = v.norm();
    if norm > 0.0 {
        v /= Complex64::new(norm, 0.0);
    } else {
        v[0] = Complex64::new(1.0, 0.0);
    }
    v
}

fn initial_data(sys: &StateSpaceSystem, config: &ReductionConfig) -> Result<InterpolationData> {
    let data = match &config.initialization {
        Initialization::Random => random_interpolation_data(
            config.reduced_order,
            sys.inputs(),
            sys.outputs(),
            0,
            config.seed,
        )?,
        Initialization::FromModel(model) => InterpolationData::from_model(model)?,
        Initialization::FromData(data) => data.clone(),
    };
    if data.len() != config.reduced_order {
        return Err(MorError::InvalidConfig(format!(
            "initialization has {} shifts but the reduced order is {}",
            data.len(),
            config.reduced_order
        )));
    }
    Ok(data)
}

/// One projection step: interpolation data in, reduced model out.
struct Step {
    model: ReducedModel,
    condition: f64,
    rank: usize,
    sylvester_residual: Option<f64>,
}

fn fixed_point<F>(
    sys: &StateSpaceSystem,
    config: &ReductionConfig,
    mut data: InterpolationData,
    mut step: F,
) -> Result<(ReducedModel, IterationTrace)>
where
    F: FnMut(&InterpolationData, &ReducedModel) -> Result<Step>,
{
    let mut trace = IterationTrace {
        records: Vec::new(),
        status: TraceStatus::MaxIterations,
    };
    if config.reduced_order == sys.order() {
        // The spaces are the whole state space: the projection reproduces
        // the full system exactly.
        trace.records.push(IterationRecord {
            iteration: 1,
            shifts: data.sorted_shifts(),
            shift_change: 0.0,
            projection_condition: 1.0,
            numerical_rank: sys.order(),
            sylvester_residual: None,
            wall_seconds: 0.0,
        });
        trace.status = TraceStatus::Converged;
        return Ok((ReducedModel::copy_of(sys), trace));
    }
    let mut current: Option<ReducedModel> = match &config.initialization {
        Initialization::FromModel(m) => Some((**m).clone()),
        _ => None,
    };
    let mut best: Option<(f64, ReducedModel)> = None;
    for iteration in 1..=config.max_iterations {
        let started = Instant::now();
        let outcome = (|| -> Result<(Step, InterpolationData, f64)> {
            let placeholder;
            let prev = match &current {
                Some(m) => m,
                None => {
                    placeholder = ReducedModel::copy_of(sys);
                    &placeholder
                }
            };
            let s = step(&data, prev)?;
            let next = InterpolationData::from_pole_residue(&pole_residue(&s.model)?)?;
            let change = shift_change_metric(&data.shifts, &next.shifts)?;
            Ok((s, next, change))
        })();
        let (s, next, change) = match outcome {
            Ok(v) => v,
            Err(e) => {
                trace.status = TraceStatus::Failed(e.to_string());
                return Err(MorError::IterationFailed {
                    iteration,
                    source: Box::new(e),
                    trace: Box::new(trace),
                    best: best.map(|(_, m)| Box::new(m)),
                });
            }
        };
        trace.records.push(IterationRecord {
            iteration,
            shifts: data.sorted_shifts(),
            shift_change: change,
            projection_condition: s.condition,
            numerical_rank: s.rank,
            sylvester_residual: s.sylvester_residual,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
        if best.as_ref().is_none_or(|(c, _)| change < *c) {
            best = Some((change, s.model.clone()));
        }
        if change <= config.tolerance {
            trace.status = TraceStatus::Converged;
            return Ok((s.model, trace));
        }
        data = next;
        current = Some(s.model);
    }
    trace.status = TraceStatus::MaxIterations;
    let best = best.map(|(_, m)| m).expect("at least one iteration ran");
    Err(MorError::NoConvergence {
        trace: Box::new(trace),
        best: Box::new(best),
    })
}

fn project(sys: &StateSpaceSystem, pair: &ProjectionPair) -> Result<Step> {
    let condition = pair.condition();
    let model = petrov_galerkin(sys, pair)?;
    Ok(Step {
        model,
        condition,
        rank: pair.numerical_rank(),
        sylvester_residual: None,
    })
}

/// Limited-time IRKA: iterate time-limited Krylov projections until the
/// shifts match the reflected poles of the reduced model.
pub fn lt_irka(sys: &StateSpaceSystem, config: &ReductionConfig) -> Result<(ReducedModel, IterationTrace)> {
    config.validate(sys, true)?;
    let ev = TimeLimitedSystem::new(sys, config.tau)?;
    let data = initial_data(sys, config)?;
    fixed_point(sys, config, data, |d, _| project(sys, &build_spaces_completed(&ev, d)?))
}

/// Standard IRKA on the infinite horizon.
pub fn irka(sys: &StateSpaceSystem, config: &ReductionConfig) -> Result<(ReducedModel, IterationTrace)> {
    config.validate(sys, false)?;
    let ev = TimeLimitedSystem::new(sys, None)?;
    let data = initial_data(sys, config)?;
    fixed_point(sys, config, data, |d, _| project(sys, &build_spaces_completed(&ev, d)?))
}

/// Solutions `P` (n x r) and `Q` (n x r) of
/// `A P + P A_r^T + B B_r^T - e^{A tau} B B_r^T e^{A_r^T tau} = 0` and
/// `A^T Q + Q A_r + C^T C_r - e^{A^T tau} C^T C_r e^{A_r tau} = 0`.
///
/// With `A_r = S D S^{-1}` the equations decouple into one shifted solve per
/// eigenvalue: column `i` of `P S^{-T}` is the time-limited right Krylov
/// vector at `-lambda_i` with direction `(S^{-1} B_r)^T e_i`, and column `i`
/// of `Q S` the left vector with direction `C_r S e_i`.
pub fn solve_time_limited_sylvester(
    ev: &TimeLimitedSystem<'_>,
    reduced: &ReducedModel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let sys = ev.system;
    let rom = &reduced.system;
    let eig = eigendecompose(&rom.a)?;
    let r = rom.order();
    let n = sys.order();
    let sinv_b = &eig.inverse_right_vectors * to_complex(&rom.b);
    let c_s = to_complex(&rom.c) * &eig.right_vectors;
    let mut p_hat = CMatrix::zeros(n, r);
    let mut q_hat = CMatrix::zeros(n, r);
    for i in 0..r {
        let shift = -eig.values[i];
        let b = sinv_b.row(i).transpose();
        let c = c_s.column(i).into_owned();
        let failed = |_| MorError::SylvesterFailure { column: i, shift };
        p_hat.set_column(i, &ev.right_vector(shift, &b).map_err(failed)?);
        q_hat.set_column(i, &ev.left_vector(shift, &c).map_err(failed)?);
    }
    let p = p_hat * eig.right_vectors.transpose();
    let q = q_hat * &eig.inverse_right_vectors;
    Ok((p.map(|x| x.re), q.map(|x| x.re)))
}

/// `||A P + P A_r^T + B B_r^T - e^{A tau} B B_r^T e^{A_r^T tau}||_F / ||B B_r^T||_F`.
pub fn sylvester_residual(
    sys: &StateSpaceSystem,
    reduced: &ReducedModel,
    tau: f64,
    p: &DMatrix<f64>,
) -> Result<f64> {
    let rom = &reduced.system;
    let bbr = &sys.b * rom.b.transpose();
    let eb = exp_action(&sys.a, tau, &sys.b)?;
    let ebr = exp_action(&rom.a, tau, &rom.b)?;
    let res = &sys.a * p + p * rom.a.transpose() + &bbr - eb * ebr.transpose();
    Ok(res.norm() / bbr.norm().max(f64::MIN_POSITIVE))
}

/// TL-TSIA: alternate between solving the time-limited Sylvester equations
/// for the current reduced model and projecting with `V = span(P)`,
/// `W = span(Q)`. Starts from `initial`, or from an IRKA run with the same
/// configuration when `None`.
pub fn tl_tsia(
    sys: &StateSpaceSystem,
    config: &ReductionConfig,
    initial: Option<&ReducedModel>,
) -> Result<(ReducedModel, IterationTrace)> {
    config.validate(sys, true)?;
    let tau = config.tau.expect("validated");
    let start = match initial {
        Some(m) => m.clone(),
        None => match &config.initialization {
            Initialization::FromModel(m) => (**m).clone(),
            _ => irka_start(sys, config)?,
        },
    };
    if start.order != config.reduced_order {
        return Err(MorError::InvalidConfig(format!(
            "initial model has order {} but the reduced order is {}",
            start.order, config.reduced_order
        )));
    }
    let config = config
        .clone()
        .with_initialization(Initialization::FromModel(Box::new(start)));
    let data = initial_data(sys, &config)?;
    let ev = TimeLimitedSystem::new(sys, Some(tau))?;
    fixed_point(sys, &config, data, |_, current| {
        let (p, q) = solve_time_limited_sylvester(&ev, current)?;
        let residual = if sys.order() <= 1500 {
            Some(sylvester_residual(sys, current, tau, &p)?)
        } else {
            None
        };
        let vb = completed_orthonormal_basis(&p);
        let wb = completed_orthonormal_basis(&q);
        let r = config.reduced_order;
        if vb.q.ncols().min(wb.q.ncols()) < r {
            return Err(MorError::RankCollapse {
                retained: vb.q.ncols().min(wb.q.ncols()),
                required: r,
            });
        }
        let pair = ProjectionPair {
            v: vb.q,
            w: wb.q,
            right_retained: vb.retained,
            left_retained: wb.retained,
        };
        let mut s = project(sys, &pair)?;
        s.sylvester_residual = residual;
        Ok(s)
    })
}

/// IRKA model used to start TL-TSIA; a non-converged run still supplies its
/// best iterate.
fn irka_start(sys: &StateSpaceSystem, config: &ReductionConfig) -> Result<ReducedModel> {
    let irka_config = config.clone().with_initialization(Initialization::Random);
    match irka(sys, &irka_config) {
        Ok((m, _)) => Ok(m),
        Err(e) => match e.best_model() {
            Some(m) => Ok(m.clone()),
            None => Err(e),
        },
    }
}

/// Dense solution of `A X + X M + F = 0` by complex Schur reduction of `M`
/// (Bartels-Stewart with the small factor triangularized); an independent
/// path used to cross-check [`solve_time_limited_sylvester`].
pub fn sylvester_bartels_stewart(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let r = m.nrows();
    let schur = nalgebra::linalg::Schur::new(to_complex(m));
    let (u, t) = schur.unpack();
    let fu = to_complex(f) * &u;
    let n = a.nrows();
    let mut x = CMatrix::zeros(n, r);
    for j in 0..r {
        // (A + t_jj I) x_j = -(F U)_j - sum_{i<j} t_ij x_i
        let mut rhs = fu.column(j).into_owned();
        for i in 0..j {
            rhs += x.column(i) * t[(i, j)];
        }
        let shift = -t[(j, j)];
        let col = shifted_solve(a, shift, &CMatrix::from_column_slice(n, 1, rhs.as_slice()))
            .map_err(|_| MorError::SylvesterFailure { column: j, shift })?;
        x.set_column(j, &col.column(0));
    }
    Ok((x * u.adjoint()).map(|z| z.re))
}

/// Right-hand sides of the two time-limited Sylvester equations in the form
/// `A X + X M + F = 0`: returns `(F_P, F_Q)`.
pub fn time_limited_sylvester_terms(
    sys: &StateSpaceSystem,
    reduced: &ReducedModel,
    tau: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let rom = &reduced.system;
    let ea = matrix_exponential(&(&sys.a * tau))?;
    let ear = matrix_exponential(&(&rom.a * tau))?;
    let fp = &sys.b * rom.b.transpose() - &ea * &sys.b * rom.b.transpose() * ear.transpose();
    let fq = sys.c.transpose() * &rom.c - ea.transpose() * sys.c.transpose() * &rom.c * &ear;
    Ok((fp, fq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_change_examples() {
        assert_eq!(shift_change_metric(&[c(1.0, 0.0)], &[c(1.0, 0.0)]).unwrap(), 0.0);
        let d = shift_change_metric(&[c(1.0, 0.0)], &[c(1.1, 0.0)]).unwrap();
        assert!((d - 0.1).abs() < 1e-15);
        let d = shift_change_metric(&[c(1.0, 1.0), c(1.0, -1.0)], &[c(1.01, -1.0), c(1.01, 1.0)])
            .unwrap();
        let direct = (2.0 * 0.01f64.powi(2)).sqrt() / (2.0 * 2.0f64).sqrt();
        assert!((d - direct).abs() < 1e-15);
        assert!(shift_change_metric(&[c(1.0, 0.0)], &[]).is_err());
    }

    #[test]
    fn random_data_is_reproducible_and_closed() {
        let a = random_interpolation_data(5, 2, 3, 2, 42).unwrap();
        let b = random_interpolation_data(5, 2, 3, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.conjugate_groups().unwrap().len(), 3);
        for s in &a.shifts {
            assert!(s.norm() >= 0.1 && s.norm() <= 1000.0);
            assert!(s.re > 0.0);
        }
    }

    #[test]
    fn config_validation() {
        let sys = StateSpaceSystem::new(
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(1, 2, 1.0),
            "t",
        )
        .unwrap();
        assert!(matches!(
            lt_irka(&sys, &ReductionConfig::new(1)),
            Err(MorError::InvalidConfig(_))
        ));
        assert!(matches!(
            irka(&sys, &ReductionConfig::new(3)),
            Err(MorError::InvalidConfig(_))
        ));
    }
}
