use super::config::{BoundCase, ExperimentConfig};
use super::io::read_matrix_csv;
use super::table::{ResultTable, RowContext};
use crate::error::{Error, Result};
use crate::estimators::{build_estimator, target_jacobian, Estimator, EstimatorOptions};
use crate::families::{build_family, check_theta, total_information, Family, FamilyOptions};
use crate::rng::RngStream;
use crate::sensitivity::{cosensitivity_at, cosensitivity_mc};
use nalgebra::DMatrix;
use serde::Serialize;
use std::sync::Arc;

/// Measured cosensitivity against the lower bound `Dχᵀ I_n⁻¹ Dχ`, with
/// `I_n` the information of the whole sample (`n J` for i.i.d. data).
#[derive(Clone, Debug, Serialize)]
pub struct EfficiencyReport {
    pub family: String,
    pub estimator: String,
    pub theta: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    #[serde(skip)]
    pub measured: DMatrix<f64>,
    #[serde(skip)]
    pub stderr: DMatrix<f64>,
    #[serde(skip)]
    pub bound: DMatrix<f64>,
    #[serde(skip)]
    pub gap: DMatrix<f64>,
    pub gap_min_eigenvalue: f64,
    /// `3 ‖stderr‖_F + 1e-10`
    pub tolerance: f64,
    /// `tr(bound) / tr(measured)`
    pub efficiency: f64,
    /// Gradients do not depend on the data, so one sample gives the exact value.
    pub exact: bool,
    /// Published tabulated sensitivity, where it differs from the computed one.
    pub tabulated: Option<f64>,
}

impl EfficiencyReport {
    /// The bound inequality within statistical tolerance.
    pub fn holds(&self) -> bool {
        self.gap_min_eigenvalue >= -self.tolerance
    }

    pub fn discrepancy(&self) -> Option<bool> {
        let se = self.stderr.norm();
        self.tabulated.map(|t| (self.measured.trace() - t).abs() > 3.0 * se + 1e-12)
    }
}

/// Every `(family, unbiased estimator)` pair shipped with the bound check.
pub fn default_bound_suite() -> Vec<BoundCase> {
    let case = |family: &str, theta: &[f64], estimator: &str, n: usize| BoundCase {
        family: family.into(),
        theta: theta.to_vec(),
        estimator: estimator.into(),
        n,
    };
    vec![
        case("location:gaussian", &[0.5], "sample_mean", 20),
        case("location:gaussian", &[0.5], "sample_median", 21),
        case("location:laplace", &[0.0], "sample_mean", 20),
        case("location:laplace", &[0.0], "sample_median", 21),
        case("location:uniform", &[1.0], "sample_mean", 20),
        case("location:gaussian:3", &[0.1, -0.2, 0.3], "sample_mean", 10),
        case("scale:gaussian", &[1.5], "second_moment_mean", 20),
        case("scale:laplace", &[0.8], "second_moment_mean", 20),
        case("uniform-scale", &[1.0], "ble_uniform_scale", 20),
        case("uniform-scale", &[1.0], "wpe_uniform_scale_unbiased", 20),
        case("uniform-scale", &[2.0], "second_moment_mean", 20),
        case("pareto", &[5.0], "phi_mean", 20),
        case("gauss2", &[0.5, 2.0], "gauss2_moments", 20),
        case("gauss2", &[0.5, 2.0], "sample_mean", 20),
        case("gauss2", &[0.5, 2.0], "sample_variance_unbiased", 20),
        case("corr2d", &[0.4], "product_mean", 20),
        case("regression", &[1.0, -0.5, 0.25], "ols", 50),
        case("flow:quadratic", &[0.3], "phi_mean", 20),
    ]
}

/// Builds the bound check for one case.
pub fn efficiency_report(
    family: &Arc<dyn Family>,
    estimator: &Arc<dyn Estimator>,
    theta: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<EfficiencyReport> {
    check_theta(&**family, theta)?;
    if let Some(m) = family.fixed_sample_size() {
        if m != n {
            return Err(Error::Config(format!("family `{}` has a fixed sample size {m}, got n = {n}", family.id())));
        }
    }
    let target = estimator.target(&**family);
    let dchi = target_jacobian(&target, &**family, theta)?.ok_or_else(|| {
        Error::Config(format!("`{}` has no unbiased target under `{}`", estimator.id(), family.id()))
    })?;
    let (p, k) = (family.param_dim(), estimator.output_dim(family.data_dim()));
    if dchi.shape() != (p, k) {
        return Err(Error::Config(format!(
            "target Jacobian of `{}` is {}x{}, expected {p}x{k}",
            estimator.id(),
            dchi.nrows(),
            dchi.ncols()
        )));
    }
    let info = total_information(&**family, theta, n)?;
    let info_inv = info
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateInformation(format!("information {info} is singular")))?;
    let bound = dchi.transpose() * info_inv * &dchi;
    let bound = 0.5 * (&bound + bound.transpose());
    let exact = estimator.is_linear();
    let (measured, stderr) = if exact {
        let sample = family.sample(theta, n, &mut RngStream::for_replicate(seed, 0))?;
        (cosensitivity_at(&**estimator, &sample)?, DMatrix::zeros(k, k))
    } else {
        let r = cosensitivity_mc(&**family, theta, &**estimator, n, reps, seed)?;
        (r.estimate, r.stderr)
    };
    let gap = &measured - &bound;
    let gap_min_eigenvalue = gap.clone().symmetric_eigen().eigenvalues.min();
    let tabulated = (family.id() == "location:laplace" && estimator.id() == "sample_mean").then(|| 2.0 / n as f64);
    Ok(EfficiencyReport {
        family: family.id().to_string(),
        estimator: estimator.id().to_string(),
        theta: theta.to_vec(),
        n,
        reps: if exact { 1 } else { reps },
        tolerance: 3.0 * stderr.norm() + 1e-10,
        efficiency: bound.trace() / measured.trace(),
        measured,
        stderr,
        bound,
        gap,
        gap_min_eigenvalue,
        exact,
        tabulated,
    })
}

/// Runs the configured cases, or the shipped suite when none are given.
pub fn run_bound_check(config: &ExperimentConfig) -> Result<Vec<EfficiencyReport>> {
    let design = config.design.as_deref().map(read_matrix_csv).transpose()?;
    let cases = if !config.cases.is_empty() {
        config.cases.clone()
    } else if let Some(fid) = &config.family {
        let thetas = config.thetas(&[]);
        if thetas.iter().any(|t| t.is_empty()) {
            return Err(Error::Config("bound check needs `theta`".into()));
        }
        let ns = config.n_grid_or(&[20]);
        let mut v = Vec::new();
        for t in &thetas {
            for e in &config.estimators {
                for &n in &ns {
                    v.push(BoundCase { family: fid.clone(), theta: t.clone(), estimator: e.clone(), n });
                }
            }
        }
        v
    } else {
        default_bound_suite()
    };
    let fopts = FamilyOptions { design: design.clone(), ..Default::default() };
    let eopts = EstimatorOptions { design, window: config.window };
    cases
        .iter()
        .map(|c| {
            let family = build_family(&c.family, &fopts)?;
            let est = build_estimator(&c.estimator, Some(&family), &eopts)?;
            efficiency_report(&family, &est, &c.theta, c.n, config.reps, config.seed)
        })
        .collect()
}

pub fn bound_table(reports: &[EfficiencyReport], seed: u64) -> ResultTable {
    let mut t = ResultTable::default();
    for r in reports {
        let ctx = RowContext {
            experiment: "bound".into(),
            family: r.family.clone(),
            estimator: r.estimator.clone(),
            theta: r.theta.clone(),
            n: r.n,
            reps: r.reps,
            eps: None,
            seed,
        };
        let k = r.measured.nrows();
        let mut cos = ctx.row("cosensitivity_trace", r.measured.trace(), Some(r.stderr.norm()), Some(r.bound.trace()));
        cos.tabulated = r.tabulated;
        cos.discrepancy = r.discrepancy();
        t.push(cos);
        t.push(ctx.row("bound_trace", r.bound.trace(), None, None));
        t.push(ctx.row("gap_min_eigenvalue", r.gap_min_eigenvalue, Some(r.tolerance), None));
        t.push(ctx.row("efficiency", r.efficiency, None, None));
        t.push(ctx.row("bound_holds", if r.holds() { 1.0 } else { 0.0 }, None, Some(1.0)));
        if k > 1 {
            for a in 0..k {
                for b in 0..k {
                    t.push(ctx.row(&format!("cos[{a},{b}]"), r.measured[(a, b)], Some(r.stderr[(a, b)]), None));
                    t.push(ctx.row(&format!("bound[{a},{b}]"), r.bound[(a, b)], None, None));
                }
            }
        }
    }
    t
}
