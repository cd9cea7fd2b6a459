use super::config::ExperimentConfig;
use super::io::read_sample_csv;
use super::table::{ResultTable, RowContext};
use crate::error::{Error, Result};
use crate::families::{build_family, FamilyOptions};
use crate::rng::RngStream;
use crate::sample::Sample;
use crate::sdot2d::{cell_integral, dtheta_w2sq, solve_dual_density, ConvexPolygon, DualOptions, DualSolveResult};
use crate::wpe::{default_window, wpe_1d_with, wpe_2d_gradients, wpe_2d_with, wpe_gradients_1d, WpeFit, WpeOptions};

/// Solves the semi-discrete dual for one set of sites and reports weights,
/// masses and the transport cost.
pub fn run_sdot_demo(config: &ExperimentConfig) -> Result<(ResultTable, DualSolveResult)> {
    let family_id = config.family.clone().unwrap_or_else(|| "plane:uniform".into());
    let family = build_family(&family_id, &FamilyOptions::default())?;
    let planar = family
        .planar()
        .ok_or_else(|| Error::Config(format!("sdot demo needs a planar family, got `{family_id}`")))?;
    let default_theta = family.reference_thetas().into_iter().next().unwrap_or_default();
    let theta = config.theta.clone().unwrap_or(default_theta);
    if theta.len() != 1 {
        return Err(Error::Config("planar families have a scalar θ".into()));
    }
    let t = theta[0];
    let sample = match &config.sample {
        Some(path) => read_sample_csv(path)?,
        None => {
            let n = config.n_grid.first().copied().unwrap_or(16);
            family.sample(&theta, n, &mut RngStream::new(config.seed, 0))?
        }
    };
    if sample.dim() != 2 {
        return Err(Error::Config(format!("sites must be planar, got dimension {}", sample.dim())));
    }
    let sites = sample.points2();
    let opts = DualOptions::default();
    let (solve, own_support) = match &config.polygon {
        Some(vertices) => {
            let poly = ConvexPolygon::new(vertices.clone())?;
            // renormalize the family density over the user polygon
            let mass = cell_integral(poly.vertices(), |x| planar.density2(t, x), |_| 1.0);
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(Error::Config("the density has no mass on the given polygon".into()));
            }
            (solve_dual_density(&poly, &|x| planar.density2(t, x) / mass, &sites, &opts, None)?, false)
        }
        None => (crate::sdot2d::solve_dual(planar, t, &sites, &opts, None)?, true),
    };
    let ctx = RowContext {
        experiment: "sdot-demo".into(),
        family: family_id,
        estimator: "sdot".into(),
        theta,
        n: sites.len(),
        reps: 1,
        eps: None,
        seed: config.seed,
    };
    let mut table = ResultTable::default();
    table.push(ctx.row("w2sq", solve.w2sq, None, None));
    table.push(ctx.row("dual_value", solve.dual_value, None, Some(solve.w2sq)));
    table.push(ctx.row("iterations", solve.iterations as f64, None, None));
    table.push(ctx.row("mass_residual", solve.grad_norm, None, Some(0.0)));
    if own_support {
        table.push(ctx.row("dtheta_w2sq", dtheta_w2sq(planar, t, &solve), None, None));
    }
    let target = 1.0 / sites.len() as f64;
    for (i, s) in sites.iter().enumerate() {
        table.push(ctx.row(&format!("site_x[{i}]"), s[0], None, None));
        table.push(ctx.row(&format!("site_y[{i}]"), s[1], None, None));
        table.push(ctx.row(&format!("weight[{i}]"), solve.weights[i], None, None));
        table.push(ctx.row(&format!("mass[{i}]"), solve.masses[i], None, Some(target)));
    }
    Ok((table, solve))
}

/// A projection fit to a data file, with per-point gradients (`n x d` rows of `p` columns).
pub fn run_wpe_fit(config: &ExperimentConfig) -> Result<(WpeFit, Vec<Vec<f64>>)> {
    let family_id = config.family.clone().ok_or_else(|| Error::Config("a `wpe` fit needs a `family`".into()))?;
    let family = build_family(&family_id, &FamilyOptions::default())?;
    let path = config.sample.as_ref().ok_or_else(|| Error::Config("a `wpe` fit needs a `sample` file".into()))?;
    let sample: Sample = read_sample_csv(path)?;
    if sample.dim() != family.data_dim() {
        return Err(Error::Config(format!(
            "sample has dimension {}, family `{family_id}` has {}",
            sample.dim(),
            family.data_dim()
        )));
    }
    if let Some(planar) = family.planar() {
        let options = WpeOptions { window: config.window.map(|w| vec![w]), grid: 9, ..Default::default() };
        let dual = DualOptions::default();
        let fit = wpe_2d_with(planar, &sample, &options, &dual)?;
        let grads = wpe_2d_gradients(planar, &fit, &dual)?;
        return Ok((fit.fit, grads.into_iter().map(|g| g.to_vec()).collect()));
    }
    let window = match config.window {
        Some(w) => vec![w],
        None => default_window(&*family, &sample)?,
    };
    let options = WpeOptions { window: Some(window), ..Default::default() };
    let fit = wpe_1d_with(&*family, &sample, &options)?;
    let grads = wpe_gradients_1d(&*family, &sample, &fit)?;
    Ok((fit, grads.into_iter().map(|g| g.as_slice().to_vec()).collect()))
}
