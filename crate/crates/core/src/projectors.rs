//! Time-limited rational Krylov spaces and Petrov-Galerkin projection.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{MorError, Result};
use crate::numerics::{
    canonical_cmp, completed_orthonormal_basis, matrix_exponential, orthonormal_basis, shifted_solve, to_complex, CMatrix,
    CVector,
};
use crate::system::{
    pole_residue, transfer, transfer_limited, transfer_limited_derivative, PoleResidueForm, ReducedModel,
    StateSpaceSystem, TimeLimitedSystem,
};

/// Conditioning bound on `W^T V` for a usable oblique projection.
pub const PROJECTION_CONDITION_LIMIT: f64 = 1e12;

const CONJUGATE_TOL: f64 = 1e-10;

/// Shifts with paired right (`b_i`, length m) and left (`c_i`, length p)
/// tangential directions.
///
/// Right conditions read `G(sigma_i) b_i`, left conditions `c_i^T G(sigma_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationData {
    pub shifts: Vec<Complex64>,
    pub right_directions: Vec<CVector>,
    pub left_directions: Vec<CVector>,
}

impl InterpolationData {
    pub fn new(
        shifts: Vec<Complex64>,
        right_directions: Vec<CVector>,
        left_directions: Vec<CVector>,
    ) -> Result<Self> {
        let r = shifts.len();
        if r == 0 {
            return Err(MorError::InvalidInterpolation("no shifts".into()));
        }
        if right_directions.len() != r || left_directions.len() != r {
            return Err(MorError::InvalidInterpolation(format!(
                "{r} shifts but {} right and {} left directions",
                right_directions.len(),
                left_directions.len()
            )));
        }
        let m = right_directions[0].len();
        let p = left_directions[0].len();
        if right_directions.iter().any(|b| b.len() != m) || left_directions.iter().any(|c| c.len() != p)
        {
            return Err(MorError::InvalidInterpolation(
                "tangential directions have inconsistent lengths".into(),
            ));
        }
        if shifts.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(MorError::InvalidInterpolation("non-finite shift".into()));
        }
        let data = InterpolationData {
            shifts,
            right_directions,
            left_directions,
        };
        data.conjugate_groups()?;
        for i in 0..r {
            for j in (i + 1)..r {
                let close = (data.shifts[i] - data.shifts[j]).norm()
                    <= 1e-12 * data.shifts[i].norm().max(1.0);
                if close
                    && close_vectors(&data.right_directions[i], &data.right_directions[j])
                    && close_vectors(&data.left_directions[i], &data.left_directions[j])
                {
                    return Err(MorError::InvalidInterpolation(format!(
                        "shift {} repeated with identical directions",
                        data.shifts[i]
                    )));
                }
            }
        }
        Ok(data)
    }

    /// Reflected poles with the residue directions of a pole-residue form:
    /// shift `-lambda_k`, right direction `conj(b_k)`, left direction `c_k`.
    pub fn from_pole_residue(pr: &PoleResidueForm) -> Result<Self> {
        let (shifts, right, left) = pr.reflected_data();
        InterpolationData::new(shifts, right, left)
    }

    pub fn from_model(model: &ReducedModel) -> Result<Self> {
        InterpolationData::from_pole_residue(&pole_residue(model)?)
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Shifts sorted by (real, imaginary).
    pub fn sorted_shifts(&self) -> Vec<Complex64> {
        let mut s = self.shifts.clone();
        s.sort_by(canonical_cmp);
        s
    }

    /// Groups entries into conjugate pairs `(i, Some(j))` and self-conjugate
    /// singletons `(i, None)`, in order of first appearance.
    pub fn conjugate_groups(&self) -> Result<Vec<(usize, Option<usize>)>> {
        let r = self.len();
        let mut used = vec![false; r];
        let mut groups = Vec::new();
        for i in 0..r {
            if used[i] {
                continue;
            }
            used[i] = true;
            if self.is_self_conjugate(i) {
                groups.push((i, None));
                continue;
            }
            let partner = (0..r).find(|&j| !used[j] && self.are_conjugate(i, j));
            match partner {
                Some(j) => {
                    used[j] = true;
                    groups.push((i, Some(j)));
                }
                None => {
                    return Err(MorError::InvalidInterpolation(format!(
                        "entry {i} (shift {}) has no conjugate partner",
                        self.shifts[i]
                    )))
                }
            }
        }
        Ok(groups)
    }

    fn is_self_conjugate(&self, i: usize) -> bool {
        let s = self.shifts[i];
        s.im.abs() <= CONJUGATE_TOL * s.norm().max(1.0)
            && is_real_vector(&self.right_directions[i])
            && is_real_vector(&self.left_directions[i])
    }

    fn are_conjugate(&self, i: usize, j: usize) -> bool {
        let (a, b) = (self.shifts[i], self.shifts[j]);
        (a.conj() - b).norm() <= CONJUGATE_TOL * a.norm().max(1.0)
            && close_vectors(&self.right_directions[i].map(|x| x.conj()), &self.right_directions[j])
            && close_vectors(&self.left_directions[i].map(|x| x.conj()), &self.left_directions[j])
    }
}

fn is_real_vector(v: &CVector) -> bool {
    let scale = v.norm().max(f64::MIN_POSITIVE);
    v.iter().all(|x| x.im.abs() <= CONJUGATE_TOL * scale)
}

fn close_vectors(a: &CVector, b: &CVector) -> bool {
    (a - b).norm() <= CONJUGATE_TOL * a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

/// Real bases of the right and left projection spaces.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub right_retained: Vec<bool>,
    pub left_retained: Vec<bool>,
}

impl ProjectionPair {
    pub fn new(v: DMatrix<f64>, w: DMatrix<f64>) -> Self {
        let (rv, rw) = (v.ncols(), w.ncols());
        ProjectionPair {
            v,
            w,
            right_retained: vec![true; rv],
            left_retained: vec![true; rw],
        }
    }

    pub fn order(&self) -> usize {
        self.v.ncols()
    }

    /// Smaller of the two numerical ranks of the defining vectors.
    pub fn numerical_rank(&self) -> usize {
        let count = |flags: &[bool]| flags.iter().filter(|k| **k).count();
        count(&self.right_retained).min(count(&self.left_retained))
    }

    /// 2-norm condition number of `W^T V`.
    pub fn condition(&self) -> f64 {
        let sv = (self.w.transpose() * &self.v).svd(false, false).singular_values;
        let smin = sv.min();
        if smin > 0.0 {
            sv.max() / smin
        } else {
            f64::INFINITY
        }
    }

    /// `Z^T = (W^T V)^{-1} W^T`.
    pub fn z_t(&self) -> Result<DMatrix<f64>> {
        let cond = self.condition();
        if !(cond < PROJECTION_CONDITION_LIMIT) {
            return Err(MorError::IllConditionedProjection { condition: cond });
        }
        (self.w.transpose() * &self.v)
            .lu()
            .solve(&self.w.transpose())
            .ok_or(MorError::IllConditionedProjection {
                condition: f64::INFINITY,
            })
    }

    /// Oblique projector `Pi = V Z^T`.
    pub fn pi(&self) -> Result<DMatrix<f64>> {
        Ok(&self.v * self.z_t()?)
    }
}

/// Complex defining vectors for every entry of `data`: right vectors
/// `(sigma I - A)^{-1}(I - e^{-sigma tau} e^{A tau}) B b` and left vectors with
/// `A^T`, `C^T c` (the standard rational Krylov vectors without a horizon).
pub fn defining_vectors(ev: &TimeLimitedSystem<'_>, data: &InterpolationData) -> Result<(CMatrix, CMatrix)> {
    let sys = ev.system;
    check_data(sys, data)?;
    let n = sys.order();
    let r = data.len();
    let mut right = CMatrix::zeros(n, r);
    let mut left = CMatrix::zeros(n, r);
    for i in 0..r {
        let s = data.shifts[i];
        right.set_column(i, &ev.right_vector(s, &data.right_directions[i])?);
        left.set_column(i, &ev.left_vector(s, &data.left_directions[i])?);
    }
    Ok((right, left))
}

fn check_data(sys: &StateSpaceSystem, data: &InterpolationData) -> Result<()> {
    if data.right_directions[0].len() != sys.inputs() || data.left_directions[0].len() != sys.outputs() {
        return Err(MorError::DimensionMismatch(format!(
            "directions of length {}/{} for a system with {} inputs and {} outputs",
            data.right_directions[0].len(),
            data.left_directions[0].len(),
            sys.inputs(),
            sys.outputs()
        )));
    }
    Ok(())
}

/// Real columns spanning the same real-closed space: a conjugate pair
/// contributes `(Re v, Im v)`, a self-conjugate entry contributes `Re v`.
pub fn realify(vectors: &CMatrix, groups: &[(usize, Option<usize>)]) -> DMatrix<f64> {
    let n = vectors.nrows();
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(vectors.ncols());
    for &(i, partner) in groups {
        let v = vectors.column(i);
        cols.push(v.map(|x| x.re));
        if partner.is_some() {
            cols.push(v.map(|x| x.im));
        }
    }
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Realified, orthonormalized bases of the spaces spanned by the defining
/// vectors of `ev` at `data`.
pub fn build_spaces(ev: &TimeLimitedSystem<'_>, data: &InterpolationData) -> Result<ProjectionPair> {
    let groups = data.conjugate_groups()?;
    let (right, left) = defining_vectors(ev, data)?;
    let r = data.len();
    let vb = orthonormal_basis(&realify(&right, &groups));
    let wb = orthonormal_basis(&realify(&left, &groups));
    let retained = vb.rank().min(wb.rank());
    if retained < r {
        return Err(MorError::RankCollapse {
            retained,
            required: r,
        });
    }
    Ok(ProjectionPair {
        v: vb.q,
        w: wb.q,
        right_retained: vb.retained,
        left_retained: wb.retained,
    })
}

/// As [`build_spaces`], but a numerically rank-deficient set of defining
/// vectors is completed to full width instead of rejected. The iteration
/// drivers use this: early iterates (random shifts, short horizons) often
/// have far fewer numerically independent directions than `r`, and the
/// iteration is what moves the shifts somewhere useful.
pub fn build_spaces_completed(ev: &TimeLimitedSystem<'_>, data: &InterpolationData) -> Result<ProjectionPair> {
    let groups = data.conjugate_groups()?;
    let (right, left) = defining_vectors(ev, data)?;
    let r = data.len();
    let vb = completed_orthonormal_basis(&realify(&right, &groups));
    let wb = completed_orthonormal_basis(&realify(&left, &groups));
    let width = vb.q.ncols().min(wb.q.ncols());
    if width < r {
        return Err(MorError::RankCollapse {
            retained: width,
            required: r,
        });
    }
    Ok(ProjectionPair {
        v: vb.q,
        w: wb.q,
        right_retained: vb.retained,
        left_retained: wb.retained,
    })
}

/// Spaces for interpolating the limited-time transfer function on `[0, tau]`.
pub fn build_time_limited_spaces(
    sys: &StateSpaceSystem,
    data: &InterpolationData,
    tau: f64,
) -> Result<ProjectionPair> {
    build_spaces(&TimeLimitedSystem::new(sys, Some(tau))?, data)
}

/// Standard rational Krylov spaces `span{(sigma_i I - A)^{-1} B b_i}`.
pub fn build_krylov_spaces(sys: &StateSpaceSystem, data: &InterpolationData) -> Result<ProjectionPair> {
    build_spaces(&TimeLimitedSystem::new(sys, None)?, data)
}

/// `A_r = (W^T V)^{-1} W^T A V`, `B_r = (W^T V)^{-1} W^T B`, `C_r = C V`.
pub fn petrov_galerkin(sys: &StateSpaceSystem, pair: &ProjectionPair) -> Result<ReducedModel> {
    let n = sys.order();
    if pair.v.nrows() != n || pair.w.nrows() != n || pair.v.ncols() != pair.w.ncols() {
        return Err(MorError::DimensionMismatch(format!(
            "bases {}x{} and {}x{} for a state dimension of {n}",
            pair.v.nrows(),
            pair.v.ncols(),
            pair.w.nrows(),
            pair.w.ncols()
        )));
    }
    let cond = pair.condition();
    if !(cond < PROJECTION_CONDITION_LIMIT) {
        return Err(MorError::IllConditionedProjection { condition: cond });
    }
    let wt = pair.w.transpose();
    let lu = (&wt * &pair.v).lu();
    let singular = MorError::IllConditionedProjection {
        condition: f64::INFINITY,
    };
    let a = lu.solve(&(&wt * (&sys.a * &pair.v))).ok_or(singular)?;
    let b = lu
        .solve(&(&wt * &sys.b))
        .ok_or(MorError::IllConditionedProjection {
            condition: f64::INFINITY,
        })?;
    let c = &sys.c * &pair.v;
    let label = format!("{} (order {})", sys.label, pair.v.ncols());
    Ok(ReducedModel::new(StateSpaceSystem::new(a, b, c, label)?, true))
}

/// Interpolation mismatches at one shift, each evaluated directly and by the
/// closed-form error expressions of the projection.
#[derive(Debug, Clone)]
pub struct InterpolationErrorReport {
    pub shift: Complex64,
    /// `G_tau(sigma) b - G_r,tau(sigma) b`.
    pub right_direct: CVector,
    /// `e^{-sigma tau} C V (sigma I - A_r)^{-1} Z^T (e^{A Pi tau} - e^{A tau}) B b`.
    pub right_formula: CVector,
    /// `c^T G_tau(sigma) - c^T G_r,tau(sigma)`, as a column.
    pub left_direct: CVector,
    /// `e^{-sigma tau} c^T C (e^{Pi A tau} - e^{A tau}) V (sigma I - A_r)^{-1} Z^T B`.
    pub left_formula: CVector,
    /// `c^T G_tau'(sigma) b - c^T G_r,tau'(sigma) b`.
    pub bitangential_direct: Complex64,
    /// Right-projector decomposition `R_P1 + R_P2`.
    pub bitangential_right: Complex64,
    /// Left-projector decomposition `R_Q1 + R_Q2`.
    pub bitangential_left: Complex64,
    /// `||G_tau(sigma) b||`, `||c^T G_tau(sigma)||`, `|c^T G_tau'(sigma) b|`.
    pub reference: [f64; 3],
    /// The same quantities for the unlimited transfer function. The
    /// limited-time values are differences of terms of this size, so at short
    /// horizons they carry absolute rounding errors relative to these.
    pub operand_scale: [f64; 3],
}

impl InterpolationErrorReport {
    /// Largest mismatch between direct and closed-form values, each scaled by
    /// the size of the interpolated quantity.
    pub fn max_discrepancy(&self) -> f64 {
        let scale = |direct: f64, k: usize| {
            direct
                .max(self.reference[k])
                .max(self.operand_scale[k])
                .max(f64::MIN_POSITIVE)
        };
        let right = (&self.right_direct - &self.right_formula).norm() / scale(self.right_direct.norm(), 0);
        let left = (&self.left_direct - &self.left_formula).norm() / scale(self.left_direct.norm(), 1);
        let bscale = scale(self.bitangential_direct.norm(), 2);
        let bp = (self.bitangential_direct - self.bitangential_right).norm() / bscale;
        let bq = (self.bitangential_direct - self.bitangential_left).norm() / bscale;
        let pq = (self.bitangential_right - self.bitangential_left).norm() / bscale;
        right.max(left).max(bp).max(bq).max(pq)
    }

    /// Relative size of the right tangential error itself.
    pub fn right_relative_error(&self) -> f64 {
        self.right_direct.norm() / self.reference[0].max(f64::MIN_POSITIVE)
    }
}

fn complex_scaled(m: &DMatrix<f64>, s: Complex64) -> CMatrix {
    m.map(|x| s * x)
}

/// Checks every interpolation condition of a projected model against the
/// closed-form error expressions. Dense: meant for small and moderate `n`.
pub fn verify_interpolation_errors(
    sys: &StateSpaceSystem,
    model: &ReducedModel,
    pair: &ProjectionPair,
    data: &InterpolationData,
    tau: f64,
) -> Result<Vec<InterpolationErrorReport>> {
    check_data(sys, data)?;
    let n = sys.order();
    let rom = &model.system;
    let r = rom.order();
    let zt = pair.z_t()?;
    let pi = &pair.v * &zt;
    let e_a = matrix_exponential(&(&sys.a * tau))?;
    let e_api = matrix_exponential(&(&sys.a * &pi * tau))?;
    let e_pia = matrix_exponential(&(&pi * &sys.a * tau))?;
    let d_right = to_complex(&(&e_api - &e_a));
    let d_left = to_complex(&(&e_pia - &e_a));
    let (vc, ztc, cc, bc) = (
        to_complex(&pair.v),
        to_complex(&zt),
        to_complex(&sys.c),
        to_complex(&sys.b),
    );
    let e_ac = to_complex(&e_a);
    let tau_c = Complex64::new(tau, 0.0);
    let mut out = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let s = data.shifts[i];
        let b = &data.right_directions[i];
        let c = &data.left_directions[i];
        let decay = (-s * tau).exp();
        // K = (sigma I - A_r)^{-1}
        let k = shifted_solve(&rom.a, s, &CMatrix::identity(r, r))?;
        let k2 = &k * &k;

        let g = transfer_limited(sys, s, tau)?;
        let gr = transfer_limited(rom, s, tau)?;
        let right_direct = (&g - &gr) * b;
        let right_formula = &cc * &vc * &k * &ztc * &d_right * &bc * b * decay;
        let left_direct = ((&g - &gr).transpose() * c).into_owned();
        let left_formula = (c.transpose() * &cc * &d_left * &vc * &k * &ztc * &bc * decay).transpose();

        let gd = transfer_limited_derivative(sys, s, tau)?;
        let gdr = transfer_limited_derivative(rom, s, tau)?;
        let bitangential_direct = (c.transpose() * (&gd - &gdr) * b)[(0, 0)];

        // M = (tau (sigma I - A) + I) e^{-sigma tau} e^{A tau} - I
        let mut shifted = complex_scaled(&sys.a, Complex64::new(-1.0, 0.0));
        for j in 0..n {
            shifted[(j, j)] += s;
        }
        let m = (&shifted * tau_c + CMatrix::identity(n, n)) * &e_ac * decay - CMatrix::identity(n, n);
        let bb = &bc * b;

        let rp1 = -(c.transpose() * &cc * &vc * (&k * tau_c + &k2) * &ztc * &d_right * &bb)[(0, 0)]
            * decay;
        // (I - P(sigma)) R^2 x = R^2 x - V K Z^T R x, with R = (sigma I - A)^{-1}
        let solve = |v: &CVector| -> Result<CVector> {
            let col = CMatrix::from_column_slice(n, 1, v.as_slice());
            Ok(shifted_solve(&sys.a, s, &col)?.column(0).into_owned())
        };
        let x = &m * &bb;
        let rx = solve(&x)?;
        let r2x = solve(&rx)?;
        let u = &r2x - &vc * &k * &ztc * &rx;
        let rp2 = (c.transpose() * &cc * &e_ac * u)[(0, 0)] * decay;

        let rq1 = -(c.transpose() * &cc * &d_left * &vc * (&k2 + &k * tau_c) * &ztc * &bb)[(0, 0)]
            * decay;
        // R^2 (I - Q(sigma)) z = R^2 z - R V K Z^T z
        let z = &e_ac * &bb;
        let r2z = solve(&solve(&z)?)?;
        let rvkz = solve(&(&vc * &k * &ztc * &z))?;
        let rq2 = (c.transpose() * &cc * &m * (r2z - rvkz))[(0, 0)] * decay;

        let reference = [
            (&g * b).norm(),
            (g.transpose() * c).norm(),
            (c.transpose() * &gd * b)[(0, 0)].norm(),
        ];
        let g_full = transfer(sys, s)?;
        let operand_scale = [
            (&g_full * b).norm(),
            (g_full.transpose() * c).norm(),
            (c.transpose() * &cc * solve(&solve(&bb)?)?)[(0, 0)].norm(),
        ];
        out.push(InterpolationErrorReport {
            shift: s,
            right_direct,
            right_formula,
            left_direct,
            left_formula,
            bitangential_direct,
            bitangential_right: rp1 + rp2,
            bitangential_left: rq1 + rq2,
            reference,
            operand_scale,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::real_vector;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn conjugate_groups_pair_up() {
        let d = InterpolationData::new(
            vec![c(1.0, 2.0), c(3.0, 0.0), c(1.0, -2.0)],
            vec![
                CVector::from_vec(vec![c(1.0, 1.0)]),
                real_vector(&[1.0]),
                CVector::from_vec(vec![c(1.0, -1.0)]),
            ],
            vec![real_vector(&[1.0]); 3],
        )
        .unwrap();
        assert_eq!(d.conjugate_groups().unwrap(), vec![(0, Some(2)), (1, None)]);
    }

    #[test]
    fn unpaired_complex_shift_is_rejected() {
        let r = InterpolationData::new(
            vec![c(1.0, 2.0)],
            vec![real_vector(&[1.0])],
            vec![real_vector(&[1.0])],
        );
        assert!(matches!(r, Err(MorError::InvalidInterpolation(_))));
    }

    #[test]
    fn galerkin_truncation() {
        let a = dmatrix![-1.0, 2.0, 3.0; 0.5, -2.0, 1.0; 0.0, 1.0, -3.0];
        let sys = StateSpaceSystem::new(a, dmatrix![1.0; 0.0; 2.0], dmatrix![1.0, 1.0, 0.0], "t")
            .unwrap();
        let v = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        let rom = petrov_galerkin(&sys, &ProjectionPair::new(v.clone(), v)).unwrap();
        assert_eq!(rom.system.a, dmatrix![-1.0, 2.0; 0.5, -2.0]);
        assert_eq!(rom.system.b, dmatrix![1.0; 0.0]);
    }

    #[test]
    fn orthogonal_spaces_are_rejected() {
        let sys = StateSpaceSystem::new(
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]),
            dmatrix![1.0; 1.0],
            dmatrix![1.0, 1.0],
            "t",
        )
        .unwrap();
        let pair = ProjectionPair::new(dmatrix![1.0; 0.0], dmatrix![0.0; 1.0]);
        assert!(matches!(
            petrov_galerkin(&sys, &pair),
            Err(MorError::IllConditionedProjection { .. })
        ));
    }

    #[test]
    fn scalar_time_limited_space() {
        let sys = StateSpaceSystem::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], "lag").unwrap();
        let data = InterpolationData::new(
            vec![c(1.0, 0.0)],
            vec![real_vector(&[1.0])],
            vec![real_vector(&[1.0])],
        )
        .unwrap();
        let ev = TimeLimitedSystem::new(&sys, Some(1.0)).unwrap();
        let (right, _) = defining_vectors(&ev, &data).unwrap();
        let exact = 0.5 * (1.0 - (-2f64).exp());
        assert!((right[(0, 0)] - c(exact, 0.0)).norm() < 1e-15);
    }
}
