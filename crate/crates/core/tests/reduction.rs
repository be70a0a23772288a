// Projection spaces, the interpolation-error expressions and the three
// reduction drivers, checked against dense reference solves and direct
// evaluations.

use mortau::metrics::{h2tau_error, optimality_residuals};
use mortau::models::{random_stable_system, random_system_with, SpectrumSpec};
use mortau::numerics::{
    eigendecompose, exp_action, matrix_exponential, max_principal_angle, rel_diff, span_residual, to_complex,
    CMatrix,
};
use mortau::projectors::{
    build_krylov_spaces, build_time_limited_spaces, defining_vectors, petrov_galerkin, verify_interpolation_errors,
    InterpolationData, ProjectionPair,
};
use mortau::reducers::{
    irka, lt_irka, random_interpolation_data, shift_change_metric, solve_time_limited_sylvester,
    sylvester_bartels_stewart, sylvester_residual, time_limited_sylvester_terms, tl_tsia, Initialization,
    ReductionConfig,
};
use mortau::system::{pole_residue, transfer, TimeLimitedSystem};
use mortau::verification::{
    check_theorem2, lt_irka_with_restarts, mixed_interpolation_data, subspace_equivalence_angle, RESTARTS,
};
use mortau::{ReducedModel, StateSpaceSystem};
use nalgebra::{dmatrix, DMatrix, DVector};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Solves `A X + X M + F = 0` through the Kronecker form
/// `(I ⊗ A + M^T ⊗ I) vec(X) = -vec(F)`.
fn kronecker_sylvester(a: &DMatrix<f64>, m: &DMatrix<f64>, f: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, r) = (a.nrows(), m.nrows());
    let op = DMatrix::<f64>::identity(r, r).kronecker(a) + m.transpose().kronecker(&DMatrix::identity(n, n));
    let rhs = -DVector::from_column_slice(f.as_slice());
    let x = op.lu().solve(&rhs).expect("nonsingular Kronecker operator");
    DMatrix::from_column_slice(n, r, x.as_slice())
}

fn tl_config(r: usize, tau: f64, seed: u64) -> ReductionConfig {
    ReductionConfig::new(r).with_tau(tau).with_seed(seed)
}

fn well_separated(n: usize, io: usize, seed: u64) -> StateSpaceSystem {
    random_system_with(n, io, io, seed, SpectrumSpec::well_separated())
}

// --- Sylvester solvers ----------------------------------------------------------

#[test]
fn column_sylvester_matches_kronecker_solve() {
    let sys = random_stable_system(20, 2, 2, 3);
    let rom = ReducedModel::copy_of(&random_stable_system(4, 2, 2, 4));
    let tau = 0.6;
    let ev = TimeLimitedSystem::new(&sys, Some(tau)).unwrap();
    let (p, q) = solve_time_limited_sylvester(&ev, &rom).unwrap();
    let (fp, fq) = time_limited_sylvester_terms(&sys, &rom, tau).unwrap();
    let p_ref = kronecker_sylvester(&sys.a, &rom.system.a.transpose(), &fp);
    let q_ref = kronecker_sylvester(&sys.a.transpose(), &rom.system.a, &fq);
    assert!(rel_diff(&p, &p_ref) < 1e-9, "{}", rel_diff(&p, &p_ref));
    assert!(rel_diff(&q, &q_ref) < 1e-9, "{}", rel_diff(&q, &q_ref));
    assert!(sylvester_residual(&sys, &rom, tau, &p).unwrap() < 1e-8);
}

#[test]
fn schur_sylvester_matches_kronecker_solve() {
    let a = random_stable_system(9, 1, 1, 5).a;
    let m = random_stable_system(3, 1, 1, 6).a;
    let f = DMatrix::from_fn(9, 3, |i, j| ((i * 3 + j) as f64).sin());
    let x = sylvester_bartels_stewart(&a, &m, &f).unwrap();
    assert!(rel_diff(&x, &kronecker_sylvester(&a, &m, &f)) < 1e-10);
}

// --- spaces and projection ------------------------------------------------------------

#[test]
fn realified_spaces_keep_the_complex_span() {
    let sys = random_stable_system(16, 2, 1, 7);
    let data = mixed_interpolation_data(5, 2, 1, 8).unwrap();
    let ev = TimeLimitedSystem::new(&sys, Some(0.8)).unwrap();
    let pair = build_time_limited_spaces(&sys, &data, 0.8).unwrap();
    let (right, left) = defining_vectors(&ev, &data).unwrap();
    assert!(span_residual(&pair.v, &right) < 1e-9);
    assert!(span_residual(&pair.w, &left) < 1e-9);
    let eye = DMatrix::<f64>::identity(5, 5);
    assert!((pair.v.transpose() * &pair.v - &eye).norm() < 1e-12);
    assert!((pair.w.transpose() * &pair.w - &eye).norm() < 1e-12);
}

#[test]
fn oblique_projector_is_idempotent() {
    let sys = random_stable_system(14, 1, 1, 9);
    let data = random_interpolation_data(4, 1, 1, 1, 10).unwrap();
    let pair = build_time_limited_spaces(&sys, &data, 1.0).unwrap();
    let pi = pair.pi().unwrap();
    assert!(rel_diff(&(&pi * &pi), &pi) < 1e-10);
}

#[test]
fn reduced_exponential_identity() {
    let sys = random_stable_system(12, 2, 2, 11);
    let data = mixed_interpolation_data(4, 2, 2, 12).unwrap();
    let tau = 0.7;
    let pair = build_time_limited_spaces(&sys, &data, tau).unwrap();
    let model = petrov_galerkin(&sys, &pair).unwrap();
    let pi = pair.pi().unwrap();
    let lhs = exp_action(&model.system.a, tau, &model.system.b).unwrap();
    let rhs = pair.z_t().unwrap() * matrix_exponential(&(&sys.a * &pi * tau)).unwrap() * &sys.b;
    assert!(rel_diff(&lhs, &rhs) < 1e-9);
}

#[test]
fn interpolation_error_expressions_match_direct_errors() {
    let sys = random_stable_system(16, 2, 2, 13);
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for seed in 0..40 {
        let data = mixed_interpolation_data(4, 2, 2, seed).unwrap();
        let Ok(result) = check_theorem2(&sys, &data, 0.8) else { continue };
        let poles = sys.poles();
        if data.shifts.iter().any(|s| poles.iter().any(|p| (s - p).norm() < 0.5)) {
            continue;
        }
        worst = worst.max(result.max_relative_discrepancy);
        checked += 1;
        if checked == 5 {
            break;
        }
    }
    assert!(checked == 5, "only {checked} usable draws");
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn long_horizon_errors_vanish() {
    // Once every exponential has decayed the spaces are the standard Krylov
    // spaces, which interpolate exactly.
    let sys = random_stable_system(10, 1, 1, 14);
    let data = random_interpolation_data(3, 1, 1, 1, 15).unwrap();
    let long = 200.0 / sys.spectral_abscissa().abs();
    let pair = build_time_limited_spaces(&sys, &data, long).unwrap();
    let model = petrov_galerkin(&sys, &pair).unwrap();
    let reports = verify_interpolation_errors(&sys, &model, &pair, &data, long).unwrap();
    for r in &reports {
        assert!(r.right_relative_error() < 1e-9, "{}", r.right_relative_error());
    }
}

#[test]
fn strongly_positive_shifts_nearly_interpolate() {
    let sys = random_stable_system(12, 1, 1, 16);
    let tau = 1.0;
    let shifts = vec![c(20.0, 0.0), c(26.0, 0.0), c(33.0, 0.0)];
    let one = DVector::from_element(1, c(1.0, 0.0));
    let data = InterpolationData::new(shifts, vec![one.clone(); 3], vec![one; 3]).unwrap();
    let pair = build_time_limited_spaces(&sys, &data, tau).unwrap();
    let model = petrov_galerkin(&sys, &pair).unwrap();
    let reports = verify_interpolation_errors(&sys, &model, &pair, &data, tau).unwrap();
    for r in &reports {
        assert!(r.right_relative_error() <= 1e-6, "{}", r.right_relative_error());
    }
}

// --- drivers -------------------------------------------------------------------

#[test]
fn irka_interpolates_at_its_final_shifts() {
    let sys = well_separated(20, 1, 17);
    let config = ReductionConfig::new(4).with_seed(1);
    let (model, trace) = mortau::verification::with_restarts(&config, RESTARTS, |c| irka(&sys, c)).unwrap();
    assert!(trace.converged());
    let pr = pole_residue(&model).unwrap();
    for lambda in &pr.poles {
        let s = -lambda;
        let g = transfer(&sys, s).unwrap()[(0, 0)];
        let gr = transfer(&model.system, s).unwrap()[(0, 0)];
        assert!((g - gr).norm() <= 1e-8 * g.norm(), "{g} vs {gr}");
    }
}

#[test]
fn irka_exact_order_reproduces_the_system() {
    let sys = StateSpaceSystem::new(dmatrix![-3.0], dmatrix![1.0], dmatrix![1.0], "first order").unwrap();
    let (model, trace) = irka(&sys, &ReductionConfig::new(1)).unwrap();
    assert!(trace.converged());
    assert!((model.system.a[(0, 0)] + 3.0).abs() < 1e-14);
    let tau = 1.0;
    assert!(h2tau_error(&sys, &model, tau).unwrap().absolute < 1e-14);
}

#[test]
fn lt_irka_fixed_point_at_exact_model() {
    let full = well_separated(10, 1, 18);
    let exact = ReducedModel::copy_of(&full);
    let config = tl_config(10, 1.0, 0).with_initialization(Initialization::FromModel(Box::new(exact)));
    let (model, trace) = lt_irka(&full, &config).unwrap();
    assert!(trace.iterations() <= 2);
    assert!(h2tau_error(&full, &model, 1.0).unwrap().absolute < 1e-10);
}

#[test]
fn lt_irka_beats_random_projections() {
    // The optimality residuals scale like e^{-sigma tau}; with every mode
    // decaying at rate >= 20 they are small at tau = 1.
    let spec = SpectrumSpec {
        min_decay: 20.0,
        max_decay: 200.0,
        ..SpectrumSpec::well_separated()
    };
    let sys = random_system_with(30, 1, 1, 19, spec);
    let tau = 1.0;
    let (model, trace) = lt_irka_with_restarts(&sys, &tl_config(4, tau, 2), RESTARTS).unwrap();
    assert!(trace.converged());
    let residual = optimality_residuals(&sys, &model, tau).unwrap().max_any().unwrap();
    assert!(residual <= 1e-4, "{residual}");
    let err = h2tau_error(&sys, &model, tau).unwrap().relative;
    for seed in 0..20 {
        let data = random_interpolation_data(4, 1, 1, 1, 100 + seed).unwrap();
        let Ok(pair) = build_krylov_spaces(&sys, &data) else { continue };
        let Ok(other) = petrov_galerkin(&sys, &pair) else { continue };
        let other_err = h2tau_error(&sys, &other, tau).unwrap().relative;
        assert!(err <= other_err, "{err} vs {other_err}");
    }
}

#[test]
fn lt_irka_converged_model_is_a_fixed_point() {
    let sys = well_separated(18, 1, 20);
    let tau = 0.8;
    let config = tl_config(4, tau, 3);
    let (model, _) = lt_irka_with_restarts(&sys, &config, RESTARTS).unwrap();
    let data = InterpolationData::from_model(&model).unwrap();
    let pair = build_time_limited_spaces(&sys, &data, tau).unwrap();
    let again = petrov_galerkin(&sys, &pair).unwrap();
    let before: Vec<_> = data.shifts.clone();
    let after: Vec<_> = again.system.poles().iter().map(|p| -p).collect();
    assert!(shift_change_metric(&before, &after).unwrap() <= 10.0 * config.tolerance);
}

#[test]
fn driver_outputs_are_real_and_sized() {
    let sys = well_separated(16, 2, 21);
    let (model, _) = lt_irka_with_restarts(&sys, &tl_config(4, 1.0, 4), RESTARTS).unwrap();
    assert_eq!(model.order, 4);
    assert_eq!(model.system.a.shape(), (4, 4));
    assert_eq!(model.system.b.shape(), (4, 2));
    assert_eq!(model.system.c.shape(), (2, 4));
    assert!(model.system.a.iter().all(|x| x.is_finite()));
}

#[test]
fn tl_tsia_fixed_point_at_exact_model() {
    let sys = well_separated(8, 1, 22);
    let exact = ReducedModel::copy_of(&sys);
    let (model, _) = tl_tsia(&sys, &tl_config(8, 0.5, 0), Some(&exact)).unwrap();
    assert!(h2tau_error(&sys, &model, 0.5).unwrap().absolute < 1e-10);
}

#[test]
fn tl_tsia_and_lt_irka_reach_comparable_errors() {
    let sys = well_separated(20, 1, 23);
    let tau = 1.0;
    let config = tl_config(4, tau, 5);
    let (lt, _) = lt_irka_with_restarts(&sys, &config, RESTARTS).unwrap();
    let (ts, trace) = tl_tsia(&sys, &config, Some(&lt)).unwrap();
    assert!(trace.converged());
    for rec in &trace.records {
        assert!(rec.sylvester_residual.unwrap() <= 1e-8);
    }
    let e_lt = h2tau_error(&sys, &lt, tau).unwrap().relative;
    let e_ts = h2tau_error(&sys, &ts, tau).unwrap().relative;
    assert!((e_lt - e_ts).abs() <= 0.1 * e_lt, "{e_lt} vs {e_ts}");
}

#[test]
fn converged_spaces_match_sylvester_spans() {
    let sys = well_separated(22, 1, 24);
    let (model, _) = lt_irka_with_restarts(&sys, &tl_config(4, 1.0, 6), RESTARTS).unwrap();
    assert!(subspace_equivalence_angle(&sys, &model, 1.0).unwrap() <= 1e-6);
}

#[test]
fn full_width_spaces_have_zero_angles() {
    let sys = random_stable_system(5, 1, 1, 25);
    let model = ReducedModel::copy_of(&sys);
    let eye = DMatrix::<f64>::identity(5, 5);
    let (fp, _) = time_limited_sylvester_terms(&sys, &model, 1.0).unwrap();
    let p = sylvester_bartels_stewart(&sys.a, &model.system.a.transpose(), &fp).unwrap();
    assert!(max_principal_angle(&eye, &p) < 1e-8);
}

#[test]
fn shift_change_metric_direct_evaluation() {
    let prev = [c(1.0, 1.0), c(1.0, -1.0)];
    let cur = [c(1.01, -1.0), c(1.01, 1.0)];
    let expected = (2.0 * 0.01f64.powi(2)).sqrt() / 2f64.sqrt() / 2f64.sqrt();
    assert!((shift_change_metric(&prev, &cur).unwrap() - expected).abs() < 1e-15);
    assert!(shift_change_metric(&prev, &prev[..1]).is_err());
}

#[test]
fn eigen_directions_of_reduced_model_are_consistent() {
    // The interpolation data extracted from a model reproduces its residues.
    let model = ReducedModel::copy_of(&random_stable_system(4, 2, 2, 26));
    let data = InterpolationData::from_model(&model).unwrap();
    let eig = eigendecompose(&model.system.a).unwrap();
    let shifts: Vec<_> = eig.values.iter().map(|l| -l).collect();
    for s in &data.shifts {
        assert!(shifts.iter().any(|t| (s - t).norm() < 1e-12));
    }
    let pair = ProjectionPair::new(DMatrix::identity(4, 4), DMatrix::identity(4, 4));
    let same = petrov_galerkin(&model.system, &pair).unwrap();
    assert!(rel_diff(&to_complex(&same.system.a), &CMatrix::from(to_complex(&model.system.a))) < 1e-15);
}

#[test]
fn tiny_horizon_identities() {
    let sys = random_stable_system(16, 1, 1, 27);
    let data = mixed_interpolation_data(2, 1, 1, 28).unwrap();
    match check_theorem2(&sys, &data, 1e-8) {
        Ok(result) => assert!(result.pass, "{result:?}"),
        Err(e) => panic!("{e}"),
    }
}
