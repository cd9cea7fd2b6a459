use super::config::ExperimentConfig;
use super::table::{ResultTable, RowContext};
use crate::error::{Error, Result};
use crate::estimators::{build_estimator, EstimatorOptions};
use crate::families::{build_family, FamilyOptions};
use crate::sensitivity::{eps_sensitivity_mc, sensitivity_mc};

pub const FIGURE1_N_GRID: [usize; 5] = [100, 316, 1000, 3162, 10_000];
pub const FIGURE1_ESTIMATORS: [&str; 3] = ["ble_uniform_scale", "sample_max", "wpe_uniform_scale"];

/// Exact bias, variance and sensitivity of the three uniform-scale estimators under `U[0, θ]`.
pub fn uniform_scale_reference(estimator: &str, n: usize, theta: f64) -> Option<(f64, f64, f64)> {
    let nf = n as f64;
    match estimator {
        "ble_uniform_scale" => Some((0.0, theta * theta / (3.0 * nf), 4.0 / nf)),
        "sample_max" => Some((-theta / (nf + 1.0), nf * theta * theta / ((nf + 1.0).powi(2) * (nf + 2.0)), 1.0)),
        "wpe_uniform_scale" | "wpe_1d" => {
            let c: Vec<f64> = (1..=n).map(|i| 3.0 * (2 * i - 1) as f64 / (2.0 * nf * nf)).collect();
            let (mean, var) = l_statistic_moments(&c, theta);
            Some((mean - theta, var, c.iter().map(|v| v * v).sum()))
        }
        _ => None,
    }
}

/// Mean and variance of `Σ c_i X_(i)` for `n` uniform draws on `[0, θ]`, using
/// `E X_(i) = θ i/(n+1)` and `Cov(X_(i), X_(j)) = θ² i (n+1−j) / ((n+1)²(n+2))`, `i ≤ j`.
pub fn l_statistic_moments(c: &[f64], theta: f64) -> (f64, f64) {
    let n = c.len();
    let nf = n as f64;
    let mean = c.iter().enumerate().map(|(k, ci)| ci * (k + 1) as f64).sum::<f64>() * theta / (nf + 1.0);
    let mut prefix = 0.0;
    let mut acc = 0.0;
    for (k, &cj) in c.iter().enumerate() {
        let j = (k + 1) as f64;
        acc += 2.0 * cj * (nf + 1.0 - j) * prefix + cj * cj * j * (nf + 1.0 - j);
        prefix += cj * j;
    }
    (mean, theta * theta * acc / ((nf + 1.0).powi(2) * (nf + 2.0)))
}

/// Bias, variance, sensitivity and ε-sensitivity of the uniform-scale
/// estimators across sample sizes.
pub fn run_figure1(config: &ExperimentConfig) -> Result<ResultTable> {
    let family_id = config.family.clone().unwrap_or_else(|| "uniform-scale".into());
    if family_id != "uniform-scale" {
        return Err(Error::Config(format!("figure1 runs on `uniform-scale`, not `{family_id}`")));
    }
    let family = build_family(&family_id, &FamilyOptions::default())?;
    let theta = config.theta.clone().unwrap_or_else(|| vec![1.0]);
    let ns = config.n_grid_or(&FIGURE1_N_GRID);
    let eps = if config.eps.is_empty() { vec![1e-4] } else { config.eps.clone() };
    let ids: Vec<String> = if config.estimators.is_empty() {
        FIGURE1_ESTIMATORS.iter().map(|s| s.to_string()).collect()
    } else {
        config.estimators.clone()
    };
    let opts = EstimatorOptions { window: config.window, ..Default::default() };
    let mut table = ResultTable::default();
    for &n in &ns {
        for id in &ids {
            let est = build_estimator(id, Some(&family), &opts)?;
            let reference = uniform_scale_reference(id, n, theta[0]);
            let ctx = RowContext {
                experiment: "figure1".into(),
                family: family_id.clone(),
                estimator: id.clone(),
                theta: theta.clone(),
                n,
                reps: config.reps,
                eps: None,
                seed: config.seed,
            };
            let sen = sensitivity_mc(&*family, &theta, &*est, n, config.reps, config.seed)?;
            let reps = config.reps as f64;
            table.push(ctx.row(
                "bias",
                sen.mean[0] - theta[0],
                Some((sen.variance[(0, 0)] / reps).sqrt()),
                reference.map(|r| r.0),
            ));
            table.push(ctx.row("variance", sen.variance[(0, 0)], Some(sen.variance_stderr[(0, 0)]), reference.map(|r| r.1)));
            table.push(ctx.row("sensitivity", sen.sensitivity(), Some(sen.stderr[(0, 0)]), reference.map(|r| r.2)));
            for &e in &eps {
                let r = eps_sensitivity_mc(&*family, &theta, &*est, n, e, config.reps, config.seed)?;
                let mut c = ctx.clone();
                c.eps = Some(e);
                table.push(c.row("eps_sensitivity", r.sensitivity(), Some(r.stderr[(0, 0)]), reference.map(|r| r.2)));
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn l_statistic_moments_match_the_mean_estimator() {
        // c_i = 2/n gives 2X̄: mean θ, variance θ²/(3n)
        let n = 40;
        let (m, v) = l_statistic_moments(&vec![2.0 / n as f64; n], 1.5);
        assert_relative_eq!(m, 1.5, max_relative = 1e-14);
        assert_relative_eq!(v, 1.5 * 1.5 / (3.0 * n as f64), max_relative = 1e-12);
        // the maximum alone
        let mut c = vec![0.0; n];
        c[n - 1] = 1.0;
        let (m, v) = l_statistic_moments(&c, 1.0);
        let nf = n as f64;
        assert_relative_eq!(m, nf / (nf + 1.0), max_relative = 1e-14);
        assert_relative_eq!(v, nf / ((nf + 1.0).powi(2) * (nf + 2.0)), max_relative = 1e-12);
    }

    #[test]
    fn projection_reference_is_near_the_asymptotics() {
        let (bias, var, sen) = uniform_scale_reference("wpe_uniform_scale", 1000, 1.0).unwrap();
        assert_relative_eq!(bias, -1.0 / 4000.0, max_relative = 1e-9);
        assert!((var * 1000.0 - 0.2).abs() < 2e-3);
        assert!((sen * 1000.0 - 3.0).abs() < 1e-5);
    }
}
