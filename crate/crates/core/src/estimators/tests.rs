use super::*;
use crate::families::{build_family, FamilyOptions, RegressionFamily};
use crate::rng::RngStream;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn fam(id: &str) -> Arc<dyn Family> {
    build_family(id, &FamilyOptions::default()).unwrap()
}

fn est(id: &str, family: Option<&Arc<dyn Family>>) -> Arc<dyn Estimator> {
    build_estimator(id, family, &EstimatorOptions::default()).unwrap()
}

fn scalar_jacobians(e: &dyn Estimator, xs: &[f64]) -> Vec<f64> {
    let j = e.jacobians(&Sample::from_scalars(xs.to_vec())).unwrap();
    (0..xs.len()).map(|i| j.get(i, 0, 0)).collect()
}

#[test]
fn worked_examples() {
    assert_eq!(scalar_jacobians(&*est("sample_max", None), &[0.2, 0.9, 0.5]), vec![0.0, 1.0, 0.0]);
    assert_eq!(est("sample_max", None).value(&Sample::from_scalars(vec![0.2, 0.9, 0.5])).unwrap()[0], 0.9);
    assert_eq!(scalar_jacobians(&*est("sample_mean", None), &[3.0, -1.0, 2.0, 8.0]), vec![0.25; 4]);
    let w = est("wpe_uniform_scale", None).value(&Sample::from_scalars(vec![3.0, 1.0, 2.0])).unwrap()[0];
    assert_abs_diff_eq!(w, 11.0 / 3.0, epsilon = 1e-15);
    assert_eq!(scalar_jacobians(&*est("sample_median", None), &[1.0, 2.0, 3.0]), vec![0.0, 1.0, 0.0]);
    assert_eq!(scalar_jacobians(&*est("sample_median", None), &[4.0, 1.0, 2.0, 3.0]), vec![0.0, 0.0, 0.5, 0.5]);
}

#[test]
fn finite_difference_examples() {
    let fd = finite_difference_jacobians(&SampleMean, &Sample::from_scalars(vec![0.3, 1.0, -2.0, 5.0])).unwrap();
    for i in 0..4 {
        assert_abs_diff_eq!(fd.get(i, 0, 0), 0.25, epsilon = 1e-10);
    }
    let fd = finite_difference_jacobians(&SecondMomentMean, &Sample::from_scalars(vec![1.0, -2.0])).unwrap();
    assert_abs_diff_eq!(fd.get(0, 0, 0), 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(fd.get(1, 0, 0), -2.0, epsilon = 1e-8);
    let fd = finite_difference_jacobians(&SampleMedian, &Sample::from_scalars(vec![1.0, 2.0, 3.0])).unwrap();
    assert_abs_diff_eq!(fd.get(1, 0, 0), 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(fd.get(0, 0, 0), 0.0, epsilon = 1e-12);
}

#[test]
fn non_finite_perturbation_reports_the_index() {
    let log_mean = Composed::new(
        "log_mean",
        Arc::new(SampleMean),
        1,
        Arc::new(|t: &DVector<f64>| {
            (DVector::from_element(1, (t[0] - 1.0).ln()), DMatrix::from_element(1, 1, 1.0 / (t[0] - 1.0)))
        }),
    );
    // the mean sits exactly at the singularity once point 1 moves down
    let s = Sample::from_scalars(vec![1.0 + 1e-9, 1.0 + 1e-9]);
    match finite_difference_jacobians(&log_mean, &s) {
        Err(crate::Error::PerturbationFailure { index }) => assert_eq!(index, 0),
        other => panic!("{other:?}"),
    }
}

fn agreement(e: &dyn Estimator, s: &Sample) {
    let a = e.jacobians(s).unwrap();
    let f = finite_difference_jacobians(e, s).unwrap();
    let (d, k) = (a.dim(), a.outputs());
    let idx: Vec<(usize, usize, usize)> =
        (0..s.n()).flat_map(|i| (0..d).flat_map(move |b| (0..k).map(move |l| (i, b, l)))).collect();
    let norm = idx.iter().map(|&(i, b, l)| a.get(i, b, l).abs()).fold(0.0, f64::max);
    for &(i, b, l) in &idx {
        let diff = (a.get(i, b, l) - f.get(i, b, l)).abs();
        assert!(diff <= 1e-5 * norm, "{} at ({i},{b},{l}): {} vs {}", e.id(), a.get(i, b, l), f.get(i, b, l));
    }
}

#[test]
fn analytic_and_finite_difference_jacobians_agree() {
    let cases: Vec<(&str, &str, Vec<f64>)> = vec![
        ("sample_mean", "location:gaussian", vec![0.3]),
        ("sample_mean", "location:gaussian:3", vec![0.3, -1.0, 2.0]),
        ("ble_uniform_scale", "uniform-scale", vec![2.0]),
        ("sample_max", "uniform-scale", vec![2.0]),
        ("sample_median", "location:laplace", vec![0.0]),
        ("second_moment_mean", "scale:gaussian", vec![1.5]),
        ("sqrt_second_moment", "scale:gaussian", vec![1.5]),
        ("phi_mean", "pareto", vec![5.0]),
        ("phi_mean", "gauss2", vec![0.5, 2.0]),
        ("gauss2_moments", "gauss2", vec![0.5, 2.0]),
        ("sample_variance", "gauss2", vec![0.5, 2.0]),
        ("sample_variance_unbiased", "gauss2", vec![0.5, 2.0]),
        ("product_mean", "corr2d", vec![0.4]),
        ("wpe_uniform_scale", "uniform-scale", vec![1.0]),
        ("wpe_uniform_scale_variant", "uniform-scale", vec![1.0]),
        ("wpe_uniform_scale_unbiased", "uniform-scale", vec![1.0]),
        ("wpe_1d", "uniform-scale", vec![1.0]),
        ("wpe_1d", "scale:laplace", vec![1.0]),
    ];
    for (seed, (eid, fid, theta)) in cases.into_iter().enumerate() {
        let f = fam(fid);
        let e = est(eid, Some(&f));
        let s = f.sample(&theta, 25, &mut RngStream::new(seed as u64, 1)).unwrap();
        agreement(&*e, &s);
    }
    let r = fam("regression");
    let s = r.sample(&[1.0, -0.5, 0.2], 50, &mut RngStream::new(3, 0)).unwrap();
    agreement(&*est("ols", None), &s);
}

#[test]
fn chain_rule_for_square_root() {
    let f = fam("scale:gaussian");
    let s = f.sample(&[1.3], 40, &mut RngStream::new(12, 0)).unwrap();
    let inner = SecondMomentMean.value_and_jacobians(&s).unwrap();
    let outer = Composed::sqrt_second_moment().jacobians(&s).unwrap();
    let dg = 0.5 / inner.0[0].sqrt();
    for i in 0..40 {
        let expect = dg * inner.1.get(i, 0, 0);
        assert!((outer.get(i, 0, 0) - expect).abs() <= 1e-6 * expect.abs());
    }
}

#[test]
fn ols_gradient_is_the_hat_matrix() {
    let w = RegressionFamily::default_design();
    let ols = Ols::new(&w).unwrap();
    let gram_inv = (w.transpose() * &w).try_inverse().unwrap();
    let expect = &w * &gram_inv;
    let r = fam("regression");
    for seed in 0..3 {
        let s = r.sample(&[0.2, 1.0, -2.0], 50, &mut RngStream::new(seed, 0)).unwrap();
        let j = ols.jacobians(&s).unwrap();
        for i in 0..50 {
            for l in 0..3 {
                assert!((j.get(i, 0, l) - expect[(i, l)]).abs() < 1e-13);
            }
        }
        assert!((j.gram() - &gram_inv).norm() < 1e-12 * gram_inv.norm());
    }
}

#[test]
fn ties_go_to_the_lowest_index() {
    assert_eq!(scalar_jacobians(&SampleMax, &[1.0, 3.0, 0.0, 3.0]), vec![0.0, 1.0, 0.0, 0.0]);
    assert_eq!(scalar_jacobians(&SampleMedian, &[2.0, 5.0, 2.0]), vec![1.0, 0.0, 0.0]);
    assert_eq!(scalar_jacobians(&SampleMedian, &[7.0, 2.0, 2.0, 1.0]), vec![0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn unbiased_l_statistic_is_unbiased() {
    // E X_(i) = θ i/(n+1) under U[0, θ]
    let n = 9;
    let theta = 2.5;
    let xs: Vec<f64> = (1..=n).map(|i| theta * i as f64 / (n + 1) as f64).collect();
    let v = LStatistic::wpe_uniform_scale_unbiased().value(&Sample::from_scalars(xs.clone())).unwrap()[0];
    assert_abs_diff_eq!(v, theta, epsilon = 1e-13);
    let biased = LStatistic::wpe_uniform_scale_variant().value(&Sample::from_scalars(xs)).unwrap()[0];
    assert_abs_diff_eq!(biased, theta * (2 * n + 1) as f64 / (2.0 * (n - 1) as f64), epsilon = 1e-13);
}

#[test]
fn moment_targets_differentiate_expectations() {
    // E_θ X² = θ² m2 for a scale family, derivative 2θ m2 with m2 = 1 after normalization
    let f = fam("scale:laplace");
    let j = target_jacobian(&SecondMomentMean.target(&*f), &*f, &[1.7]).unwrap().unwrap();
    assert!((j[(0, 0)] - 2.0 * 1.7).abs() < 1e-8);
    // Pareto potential: the Jacobian of E φ equals Dχ
    let p = fam("pareto");
    let phi = est("phi_mean", Some(&p));
    let j = target_jacobian(&phi.target(&*p), &*p, &[5.0]).unwrap().unwrap();
    let dchi = p.estimand_jacobian(&[5.0]);
    assert!((j[(0, 0)] - dchi[(0, 0)]).abs() < 1e-7 * dchi[(0, 0)].abs());
}

#[test]
fn builtin_catalog_is_complete() {
    let c = register_builtin_estimators();
    for id in BUILTIN_ESTIMATOR_IDS {
        let needs_family = matches!(*id, "phi_mean" | "wpe_1d" | "wpe_2d");
        assert_eq!(c.get(id).is_some(), !needs_family, "{id}");
    }
    assert!(build_estimator("nope", None, &EstimatorOptions::default()).is_err());
    assert!(build_estimator("wpe_2d", Some(&fam("uniform-scale")), &EstimatorOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn permutation_equivariance(xs in prop::collection::vec(-10.0f64..10.0, 3..20), shift in 0usize..100) {
        let n = xs.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        prop_assume!({ let mut p = perm.clone(); p.sort(); p.dedup(); p.len() == n });
        let permuted: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
        for id in ["sample_mean", "sample_max", "sample_median", "second_moment_mean", "wpe_uniform_scale", "sample_variance"] {
            let e = est(id, None);
            let a = scalar_jacobians(&*e, &xs);
            let b = scalar_jacobians(&*e, &permuted);
            // distinct values only: the tie convention is index dependent
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted.windows(2).all(|w| w[0] < w[1]));
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(b[k], a[i]);
            }
        }
    }
}
