use wcrlab::estimators::{build_estimator, EstimatorOptions};
use wcrlab::families::{build_family, FamilyOptions};
use wcrlab::harness::{efficiency_report, run_experiment, ExperimentConfig, ExperimentKind};

fn run_with_threads(config: &ExperimentConfig, threads: usize) -> String {
    let dir = tempfile::tempdir().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| run_experiment(config, dir.path())).unwrap();
    std::fs::read_to_string(dir.path().join(format!("{}.csv", config.experiment.name()))).unwrap()
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let mut figure = ExperimentConfig::new(ExperimentKind::Figure1, 11);
    figure.n_grid = vec![50, 200];
    figure.reps = 300;
    let mut bound = ExperimentConfig::new(ExperimentKind::Bound, 12);
    bound.reps = 200;
    let mut clt = ExperimentConfig::new(ExperimentKind::Clt, 13);
    clt.n_grid = vec![200];
    clt.reps = 200;
    for config in [figure, bound, clt] {
        let one = run_with_threads(&config, 1);
        let four = run_with_threads(&config, 4);
        assert_eq!(one, four, "{:?}", config.experiment);
        assert!(one.starts_with("schema,experiment,family,estimator,theta,n,reps,eps,metric,value"));
    }
}

#[test]
fn gaussian_variance_gap_is_positive_and_vanishes_relative_to_n() {
    let family = build_family("gauss2", &FamilyOptions::default()).unwrap();
    let opts = EstimatorOptions::default();
    let theta = [0.5, 2.0];
    let var = build_estimator("sample_variance_unbiased", Some(&family), &opts).unwrap();
    let mut scaled = Vec::new();
    for (k, n) in [10usize, 40, 160].into_iter().enumerate() {
        let r = efficiency_report(&family, &var, &theta, n, 4000, 500 + k as u64).unwrap();
        if n <= 40 {
            assert!(r.gap_min_eigenvalue > r.tolerance, "n = {n}: gap {} tol {}", r.gap_min_eigenvalue, r.tolerance);
        }
        // 4σ²/(n(n-1)) is the exact gap
        let exact = 4.0 * theta[1] / (n * (n - 1)) as f64;
        assert!((r.gap[(0, 0)] - exact).abs() <= r.tolerance, "n = {n}");
        scaled.push(n as f64 * r.gap[(0, 0)]);
    }
    assert!(scaled[0] > scaled[1] && scaled[1] > scaled[2], "{scaled:?}");

    let joint = build_estimator("gauss2_moments", Some(&family), &opts).unwrap();
    let r = efficiency_report(&family, &joint, &theta, 20, 4000, 9).unwrap();
    assert!(r.holds());
    assert!(r.gap.amax() <= r.tolerance, "joint moments should be efficient: {}", r.gap);
}

#[test]
fn laplace_mean_row_flags_the_tabulated_value() {
    let family = build_family("location:laplace", &FamilyOptions::default()).unwrap();
    let est = build_estimator("sample_mean", Some(&family), &EstimatorOptions::default()).unwrap();
    let r = efficiency_report(&family, &est, &[0.0], 25, 10, 1).unwrap();
    assert!(r.exact);
    assert!((r.measured[(0, 0)] - 1.0 / 25.0).abs() < 1e-15);
    assert_eq!(r.tabulated, Some(2.0 / 25.0));
    assert_eq!(r.discrepancy(), Some(true));
}
