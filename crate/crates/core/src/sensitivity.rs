//! Monte Carlo sensitivity, ε-sensitivity and cosensitivity.
//!
//! Replicate `r` always draws from stream `r` of the master seed and the
//! per-replicate results are folded in index order, so reports do not depend
//! on the number of threads.

use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::families::{check_theta, Family};
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Largest tolerated fraction of replicates without a usable gradient.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub family_id: String,
    pub estimator_id: String,
    pub theta: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub epsilon: Option<f64>,
    pub seed: u64,
    /// Cosensitivity (`k x k`), or a `1 x 1` sensitivity.
    pub estimate: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
    /// Monte Carlo mean of `T_n`.
    pub mean: DVector<f64>,
    /// Monte Carlo covariance of `T_n`.
    pub variance: DMatrix<f64>,
    pub variance_stderr: DMatrix<f64>,
    /// Replicates dropped because the estimator failed.
    pub failures: usize,
}

impl SensitivityReport {
    /// Trace of the estimate; the sensitivity for scalar estimators.
    pub fn sensitivity(&self) -> f64 {
        self.estimate.trace()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Sensitivity,
    Cosensitivity,
    Epsilon,
}

struct Replicate {
    value: DVector<f64>,
    metric: DMatrix<f64>,
}

fn run_replicate(
    family: &dyn Family,
    theta: &[f64],
    estimator: &dyn Estimator,
    n: usize,
    seed: u64,
    r: usize,
    kind: Kind,
    eps: f64,
) -> Result<std::result::Result<Replicate, Error>> {
    let mut rng = RngStream::for_replicate(seed, r);
    let sample = family.sample(theta, n, &mut rng)?;
    let out = match kind {
        Kind::Epsilon => (|| {
            let value = estimator.value(&sample)?;
            let mut noisy = sample.clone();
            for v in noisy.as_mut_slice() {
                let z: f64 = rng.sample(StandardNormal);
                *v += eps * z;
            }
            let diff = estimator.value(&noisy)? - &value;
            if diff.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite perturbed estimate".into()));
            }
            Ok(Replicate { value, metric: DMatrix::from_element(1, 1, diff.norm_squared() / (eps * eps)) })
        })(),
        _ => estimator.value_and_jacobians(&sample).and_then(|(value, jac)| {
            if !jac.is_finite() || value.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite gradient".into()));
            }
            let metric = match kind {
                Kind::Sensitivity => DMatrix::from_element(1, 1, jac.squared_norm()),
                _ => jac.gram(),
            };
            Ok(Replicate { value, metric })
        }),
    };
    match out {
        Err(e @ (Error::Config(_) | Error::Unsupported(_))) => Err(e),
        other => Ok(other),
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    family: &dyn Family,
    theta: &[f64],
    estimator: &dyn Estimator,
    n: usize,
    reps: usize,
    seed: u64,
    kind: Kind,
    eps: f64,
) -> Result<SensitivityReport> {
    if n == 0 || reps == 0 {
        return Err(Error::Config(format!("need n >= 1 and reps >= 1, got n = {n}, reps = {reps}")));
    }
    if kind == Kind::Epsilon && !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("perturbation scale must be positive, got {eps}")));
    }
    check_theta(family, theta)?;
    let results: Vec<_> = (0..reps)
        .into_par_iter()
        .map(|r| run_replicate(family, theta, estimator, n, seed, r, kind, eps))
        .collect::<Result<Vec<_>>>()?;
    let mut ok = Vec::with_capacity(reps);
    let mut failures = 0;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(rep) => ok.push(rep),
            Err(e) => {
                log::debug!("replicate {r} dropped: {e}");
                failures += 1;
            }
        }
    }
    if failures as f64 > MAX_FAILURE_FRACTION * reps as f64 || ok.is_empty() {
        return Err(Error::DegenerateGradient { failed: failures, reps });
    }
    let (estimate, stderr) = mean_and_stderr(ok.iter().map(|r| &r.metric));
    let m = ok.len() as f64;
    let k = ok[0].value.len();
    let mean = ok.iter().fold(DVector::zeros(k), |acc, r| acc + &r.value) / m;
    let products: Vec<DMatrix<f64>> = ok
        .iter()
        .map(|r| {
            let c = &r.value - &mean;
            &c * c.transpose()
        })
        .collect();
    let (raw, raw_err) = mean_and_stderr(products.iter());
    // unbiased covariance; the stderr of a mean of products is a fine proxy
    let scale = if ok.len() > 1 { m / (m - 1.0) } else { 1.0 };
    let estimate = 0.5 * (&estimate + estimate.transpose());
    Ok(SensitivityReport {
        family_id: family.id().to_string(),
        estimator_id: estimator.id().to_string(),
        theta: theta.to_vec(),
        n,
        reps,
        epsilon: (kind == Kind::Epsilon).then_some(eps),
        seed,
        estimate,
        stderr,
        mean,
        variance: raw * scale,
        variance_stderr: raw_err * scale,
        failures,
    })
}

/// Entrywise mean and standard error of a sequence of equally shaped matrices.
fn mean_and_stderr<'a>(items: impl Iterator<Item = &'a DMatrix<f64>> + Clone) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut count = 0.0;
    let mut mean: Option<DMatrix<f64>> = None;
    for x in items.clone() {
        count += 1.0;
        mean = Some(match mean {
            None => x.clone(),
            Some(m) => m + x,
        });
    }
    let mean = mean.expect("non-empty") / count;
    if count < 2.0 {
        return (mean.clone(), DMatrix::zeros(mean.nrows(), mean.ncols()));
    }
    let mut ss = DMatrix::zeros(mean.nrows(), mean.ncols());
    for x in items {
        ss += (x - &mean).map(|v| v * v);
    }
    let stderr = ss.map(|v| (v / (count - 1.0)).sqrt() / count.sqrt());
    (mean, stderr)
}

/// `E[Σ_i ‖∇_{x_i} T_n‖²]`, as a `1 x 1` report.
pub fn sensitivity_mc(
    family: &dyn Family,
    theta: &[f64],
    estimator: &dyn Estimator,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    run(family, theta, estimator, n, reps, seed, Kind::Sensitivity, 0.0)
}

/// `E[Σ_i (D_{x_i} T_n)ᵀ D_{x_i} T_n]`, a `k x k` report.
pub fn cosensitivity_mc(
    family: &dyn Family,
    theta: &[f64],
    estimator: &dyn Estimator,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    run(family, theta, estimator, n, reps, seed, Kind::Cosensitivity, 0.0)
}

/// `E‖T(X + ξ) − T(X)‖² / ε²` with `ξ ~ N(0, ε² I)`; for a fixed seed the
/// same `X` and the same standardized noise are used at every `ε`.
pub fn eps_sensitivity_mc(
    family: &dyn Family,
    theta: &[f64],
    estimator: &dyn Estimator,
    n: usize,
    epsilon: f64,
    reps: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    run(family, theta, estimator, n, reps, seed, Kind::Epsilon, epsilon)
}

/// `Σ_i (D_{x_i} T_n)ᵀ D_{x_i} T_n` at one sample, exact when the gradient
/// does not depend on the data.
pub fn cosensitivity_at(estimator: &dyn Estimator, sample: &Sample) -> Result<DMatrix<f64>> {
    let j = estimator.jacobians(sample)?;
    if !j.is_finite() {
        return Err(Error::DegenerateGradient { failed: 1, reps: 1 });
    }
    Ok(j.gram())
}

/// Default perturbation scale for sample size `n`.
pub fn default_epsilon(n: usize) -> f64 {
    if n <= 10_000 {
        1e-4
    } else {
        1e-2 / (n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{build_estimator, EstimatorOptions};
    use crate::families::{build_family, FamilyOptions};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn fam(id: &str) -> Arc<dyn Family> {
        build_family(id, &FamilyOptions::default()).unwrap()
    }
    fn est(id: &str, f: &Arc<dyn Family>) -> Arc<dyn Estimator> {
        build_estimator(id, Some(f), &EstimatorOptions::default()).unwrap()
    }

    #[test]
    fn mean_sensitivity_is_one_over_n() {
        let f = fam("location:gaussian");
        let r = sensitivity_mc(&*f, &[0.0], &*est("sample_mean", &f), 37, 20, 1).unwrap();
        assert_relative_eq!(r.sensitivity(), 1.0 / 37.0, max_relative = 1e-13);
        assert!(r.stderr[(0, 0)] < 1e-15);
    }

    #[test]
    fn maximum_has_unit_sensitivity() {
        let f = fam("uniform-scale");
        let r = sensitivity_mc(&*f, &[1.0], &*est("sample_max", &f), 100, 1, 3).unwrap();
        assert_eq!(r.sensitivity(), 1.0);
    }

    #[test]
    fn even_median_sensitivity_is_half() {
        let f = fam("location:laplace");
        let r = sensitivity_mc(&*f, &[0.0], &*est("sample_median", &f), 10, 5, 3).unwrap();
        assert_eq!(r.sensitivity(), 0.5);
    }

    #[test]
    fn gauss_moments_cosensitivity() {
        // E[(1, 2X)ᵀ(1, 2X)]/n with X ~ N(0, 1): [[1, 0], [0, 4]]/n
        let f = fam("gauss2");
        let n = 50;
        let r = cosensitivity_mc(&*f, &[0.0, 1.0], &*est("gauss2_moments", &f), n, 4000, 5).unwrap();
        let expect = [[1.0, 0.0], [0.0, 4.0]];
        for a in 0..2 {
            for b in 0..2 {
                let e = expect[a][b] / n as f64;
                assert!((r.estimate[(a, b)] - e).abs() < 4.0 * r.stderr[(a, b)] + 1e-15, "{a}{b}: {}", r.estimate);
            }
        }
    }

    #[test]
    fn scalar_cosensitivity_equals_sensitivity() {
        let f = fam("scale:gaussian");
        let e = est("second_moment_mean", &f);
        let a = sensitivity_mc(&*f, &[1.2], &*e, 20, 50, 8).unwrap();
        let b = cosensitivity_mc(&*f, &[1.2], &*e, 20, 50, 8).unwrap();
        assert_relative_eq!(a.sensitivity(), b.estimate[(0, 0)], max_relative = 1e-14);
    }

    #[test]
    fn linear_eps_sensitivity_does_not_depend_on_eps() {
        let f = fam("location:laplace");
        let e = est("sample_mean", &f);
        let a = eps_sensitivity_mc(&*f, &[0.0], &*e, 30, 1e-2, 200, 4).unwrap();
        let b = eps_sensitivity_mc(&*f, &[0.0], &*e, 30, 1e-4, 200, 4).unwrap();
        assert_relative_eq!(a.sensitivity(), b.sensitivity(), max_relative = 1e-6);
        assert!((a.sensitivity() - 1.0 / 30.0).abs() < 4.0 * a.stderr[(0, 0)]);
    }

    #[test]
    fn reports_are_reproducible() {
        let f = fam("uniform-scale");
        let e = est("wpe_uniform_scale", &f);
        let a = cosensitivity_mc(&*f, &[1.0], &*e, 40, 64, 99).unwrap();
        let b = cosensitivity_mc(&*f, &[1.0], &*e, 40, 64, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_reps_is_a_config_error() {
        let f = fam("uniform-scale");
        let e = est("sample_max", &f);
        assert!(matches!(sensitivity_mc(&*f, &[1.0], &*e, 10, 0, 1), Err(Error::Config(_))));
    }
}
