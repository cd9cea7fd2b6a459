use super::config::ExperimentConfig;
use super::table::{ResultTable, RowContext};
use crate::error::{Error, Result};
use crate::estimators::{build_estimator, EstimatorOptions};
use crate::families::{build_family, wasserstein_information, FamilyOptions};
use crate::rng::RngStream;
use crate::sensitivity::sensitivity_mc;
use crate::wpe::wpe_asymptotic_covariance;
use rayon::prelude::*;

/// Mean, unbiased variance, skewness and excess kurtosis.
pub fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let central = |k: i32| xs.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    let var = if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    (mean, var, central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0)
}

/// Spread of `√n(θ̂ − θ)` across replicates against the asymptotic covariance.
pub fn run_clt_check(config: &ExperimentConfig) -> Result<ResultTable> {
    let family_id = config.family.clone().unwrap_or_else(|| "uniform-scale".into());
    let family = build_family(&family_id, &FamilyOptions::default())?;
    if family.param_dim() != 1 || family.data_dim() != 1 {
        return Err(Error::Config(format!("clt check needs a scalar one dimensional family, got `{family_id}`")));
    }
    let est_id = config.estimators.first().cloned().unwrap_or_else(|| "wpe_1d".into());
    let est = build_estimator(&est_id, Some(&family), &EstimatorOptions { window: config.window, ..Default::default() })?;
    let mut table = ResultTable::default();
    for theta in config.thetas(&[1.0]) {
        let sigma = wpe_asymptotic_covariance(&*family, &theta)?[(0, 0)];
        for n in config.n_grid_or(&[2000]) {
            let z = (0..config.reps)
                .into_par_iter()
                .map(|r| {
                    let s = family.sample(&theta, n, &mut RngStream::for_replicate(config.seed, r))?;
                    Ok((n as f64).sqrt() * (est.value(&s)?[0] - theta[0]))
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, var, skew, kurt) = moments(&z);
            let reps = config.reps as f64;
            let ctx = RowContext {
                experiment: "clt".into(),
                family: family_id.clone(),
                estimator: est_id.clone(),
                theta: theta.clone(),
                n,
                reps: config.reps,
                eps: None,
                seed: config.seed,
            };
            table.push(ctx.row("scaled_mean", mean, Some((var / reps).sqrt()), None));
            table.push(ctx.row("scaled_variance", var, Some(var * (2.0 / (reps - 1.0)).sqrt()), Some(sigma)));
            table.push(ctx.row("variance_ratio", var / sigma, Some((2.0 / (reps - 1.0)).sqrt() * var / sigma), Some(1.0)));
            table.push(ctx.row("skewness", skew, Some((6.0 / reps).sqrt()), Some(0.0)));
            table.push(ctx.row("excess_kurtosis", kurt, Some((24.0 / reps).sqrt()), Some(0.0)));
        }
    }
    Ok(table)
}

/// `n Σ_i ‖∂θ̂/∂x_i‖²` across sample sizes against `tr J(θ)⁻¹`.
pub fn run_wpe_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    let family_id = config.family.clone().unwrap_or_else(|| "uniform-scale".into());
    let family = build_family(&family_id, &FamilyOptions::default())?;
    let est_id = config.estimators.first().cloned().unwrap_or_else(|| "wpe_1d".into());
    let est = build_estimator(&est_id, Some(&family), &EstimatorOptions { window: config.window, ..Default::default() })?;
    let default_theta = match config.family {
        None => vec![1.0],
        Some(_) => family.reference_thetas().into_iter().next().unwrap_or_default(),
    };
    let mut table = ResultTable::default();
    for theta in config.thetas(&default_theta) {
        let j = wasserstein_information(&*family, &theta)?.matrix;
        let jinv = j
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateInformation(format!("information {j} is singular")))?;
        let limit = jinv.trace();
        let sigma = wpe_asymptotic_covariance(&*family, &theta).ok().map(|s| s.trace());
        for n in config.n_grid_or(&[100, 1000, 10_000]) {
            let r = sensitivity_mc(&*family, &theta, &*est, n, config.reps, config.seed)?;
            let nf = n as f64;
            let scaled = nf * r.sensitivity();
            let se = nf * r.stderr[(0, 0)];
            let ctx = RowContext {
                experiment: "wpe-sweep".into(),
                family: family_id.clone(),
                estimator: est_id.clone(),
                theta: theta.clone(),
                n,
                reps: config.reps,
                eps: None,
                seed: config.seed,
            };
            table.push(ctx.row("n_sensitivity", scaled, Some(se), Some(limit)));
            table.push(ctx.row("relative_deviation", (scaled - limit).abs() / limit, Some(se / limit), Some(0.0)));
            table.push(ctx.row("n_variance", nf * r.variance.trace(), Some(nf * r.variance_stderr.trace()), sigma));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_moments() {
        let (m, v, s, k) = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        assert!(s.abs() < 1e-15);
        assert!((k - (-1.36)).abs() < 1e-12);
    }
}
