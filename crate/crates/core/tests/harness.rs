// File formats, benchmark runs and randomized invariants.

use std::fs;

use mortau::harness::matrix_market::{parse_matrix_market, read_matrix, to_matrix_market, write_matrix_market};
use mortau::harness::{
    load_model, load_system, rows_from_csv, rows_from_json, run_benchmark, save_model, Algorithm, BenchmarkSpec,
    ModelSource, RowStatus,
};
use mortau::numerics::{orthonormal_basis, rel_diff};
use mortau::reducers::shift_change_metric;
use mortau::{MorError, ReducedModel};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn write_system(dir: &std::path::Path, n: usize) {
    let sys = mortau::models::random_stable_system(n, 1, 1, 3);
    write_matrix_market(&dir.join("A.mtx"), &sys.a).unwrap();
    write_matrix_market(&dir.join("B.mtx"), &sys.b).unwrap();
    write_matrix_market(&dir.join("C.mtx"), &sys.c).unwrap();
}

#[test]
fn matrix_market_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_system(dir.path(), 9);
    let sys = load_system(&ModelSource::Named(dir.path().to_string_lossy().into_owned())).unwrap();
    let original = mortau::models::random_stable_system(9, 1, 1, 3);
    assert_eq!(sys.a, original.a);
    assert_eq!(sys.b, original.b);
    assert_eq!(sys.c, original.c);

    let files = ModelSource::parse(&format!(
        "{},{},{}",
        dir.path().join("A.mtx").display(),
        dir.path().join("B.mtx").display(),
        dir.path().join("C.mtx").display()
    ));
    assert_eq!(load_system(&files).unwrap().a, original.a);
}

#[test]
fn dense_text_matrices_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("A.txt"), "-1 0\n0 -2\n").unwrap();
    fs::write(dir.path().join("B.csv"), "1\n1\n").unwrap();
    fs::write(dir.path().join("C.txt"), "% output map\n1 1\n").unwrap();
    let sys = load_system(&ModelSource::Named(dir.path().to_string_lossy().into_owned())).unwrap();
    assert_eq!(sys.order(), 2);
    assert_eq!(sys.c, DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
}

#[test]
fn malformed_matrix_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("A.mtx");
    fs::write(&path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n").unwrap();
    match read_matrix(&path) {
        Err(MorError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_model_is_a_config_error() {
    let err = load_system(&ModelSource::Named("no-such-model-here".into())).unwrap_err();
    assert!(matches!(err, MorError::InvalidConfig(_)), "{err:?}");
}

#[test]
fn reduced_models_round_trip_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let model = ReducedModel::copy_of(&mortau::models::random_stable_system(3, 2, 1, 4));
    let path = dir.path().join("rom.json");
    save_model(&path, &model).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back.system.a, model.system.a);
    assert_eq!(back.order, 3);
}

fn bench_spec(dir: &std::path::Path, order: usize) -> BenchmarkSpec {
    let text = format!(
        r#"
model_source = "synthetic:16:1:1:2"
reduced_order = {order}
horizons = [0.5, 2.0]
algorithms = ["lt-irka", "irka", "tl-tsia"]
seed = 3
output_path = "{}"
"#,
        dir.join("out").display()
    );
    BenchmarkSpec::from_toml(&text).unwrap()
}

#[test]
fn benchmark_writes_tables_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let spec = bench_spec(dir.path(), 3);
    let report = run_benchmark(&spec).unwrap();
    assert_eq!(report.rows.len(), 6);
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let from_csv = rows_from_csv(&csv).unwrap();
    let from_json = rows_from_json(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(from_csv.len(), 6);
    for (a, b) in from_csv.iter().zip(&from_json) {
        assert_eq!(a.algorithm, b.algorithm);
        assert_eq!(a.tau, b.tau);
        assert_eq!(a.rel_error, b.rel_error);
    }
    for row in &report.rows {
        assert_ne!(row.status, RowStatus::Failed, "{row:?}");
    }
    let trajectories: Vec<_> = fs::read_dir(out.join("trajectories")).unwrap().collect();
    assert_eq!(trajectories.len(), 6);
    let first = trajectories[0].as_ref().unwrap().path();
    let text = fs::read_to_string(first).unwrap();
    assert!(text.starts_with("t,error_norm\n"));
    assert_eq!(text.lines().count(), 1001);
}

#[test]
fn benchmark_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_benchmark(&bench_spec(a.path(), 3)).unwrap();
    let rb = run_benchmark(&bench_spec(b.path(), 3)).unwrap();
    for (x, y) in ra.rows.iter().zip(&rb.rows) {
        assert_eq!(x.rel_error, y.rel_error);
        assert_eq!(x.iterations, y.iterations);
    }
}

#[test]
fn impossible_order_gives_failed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&bench_spec(dir.path(), 40)).unwrap();
    assert!(report.rows.iter().all(|r| r.status == RowStatus::Failed));
}

#[test]
fn bad_spec_is_rejected() {
    assert!(BenchmarkSpec::from_toml("reduced_order = 2").is_err());
    let text = r#"
model_source = "fom"
reduced_order = 2
horizons = [-1.0]
algorithms = ["irka"]
output_path = "x"
"#;
    assert!(matches!(BenchmarkSpec::from_toml(text), Err(MorError::InvalidConfig(_))));
    assert!("tl-bt".parse::<Algorithm>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_market_text_round_trips(
        rows in 1usize..6,
        cols in 1usize..6,
        values in prop::collection::vec(-1e6f64..1e6, 36),
    ) {
        let m = DMatrix::from_fn(rows, cols, |i, j| values[i * 6 + j]);
        let back = parse_matrix_market("prop", &to_matrix_market(&m)).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn shift_change_ignores_ordering(
        re in prop::collection::vec(-10.0f64..10.0, 1..6),
        bump in 0.0f64..1.0,
    ) {
        let prev: Vec<_> = re.iter().map(|&x| Complex64::new(x, 1.0)).collect();
        let mut cur: Vec<_> = prev.iter().map(|z| z + bump).collect();
        cur.reverse();
        let d = shift_change_metric(&prev, &cur).unwrap();
        prop_assert!(d >= 0.0);
        let base: f64 = prev.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let expected = bump * (prev.len() as f64).sqrt() / base;
        prop_assert!((d - expected).abs() <= 1e-12 * (1.0 + expected));
        prop_assert_eq!(shift_change_metric(&prev, &prev).unwrap(), 0.0);
    }

    #[test]
    fn orthonormal_basis_spans_its_input(
        values in prop::collection::vec(-1.0f64..1.0, 40),
        cols in 1usize..5,
    ) {
        let m = DMatrix::from_fn(8, cols, |i, j| values[i * 5 + j]);
        let basis = orthonormal_basis(&m);
        let q = &basis.q;
        let eye = DMatrix::<f64>::identity(q.ncols(), q.ncols());
        prop_assert!((q.transpose() * q - eye).norm() < 1e-12);
        let projected = q * (q.transpose() * &m);
        prop_assert!(rel_diff(&projected, &m) < 1e-9);
    }
}
