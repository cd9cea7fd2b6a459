//! End-to-end acceptance checks. Runs as a plain binary so each criterion
//! prints one line whether or not it passes.

use rand::Rng;
use std::sync::Arc;
use wcrlab::estimators::{build_estimator, EstimatorOptions, Ols, SampleMedian};
use wcrlab::families::{
    build_family, wasserstein_information, wasserstein_information_quadrature, Family, FamilyOptions, RegressionFamily,
};
use wcrlab::harness::{run_bound_check, run_clt_check, run_figure1, run_wpe_sweep, ExperimentConfig, ExperimentKind, ResultTable};
use wcrlab::rng::RngStream;
use wcrlab::sample::Sample;
use wcrlab::sdot2d::{
    dtheta_w2sq, grad_xi_w2sq, mixed_derivative_xi_theta, solve_dual, DualOptions, PlanarFamily, Point,
};
use wcrlab::sensitivity::{cosensitivity_at, eps_sensitivity_mc};
use wcrlab::wpe::wpe_2d;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// `|value - target| <= max(rel * |target|, 3 stderr)`
fn within(value: f64, stderr: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= (rel * target.abs()).max(3.0 * stderr)
}

fn metric(table: &ResultTable, est: &str, n: usize, name: &str) -> Result<(f64, f64), String> {
    table
        .find(est, n, name)
        .map(|r| (r.value, r.stderr.unwrap_or(0.0)))
        .ok_or_else(|| format!("missing {est}/{n}/{name}"))
}

fn figure1() -> Outcome {
    let mut config = ExperimentConfig::new(ExperimentKind::Figure1, 20240101);
    config.n_grid = vec![1000];
    config.eps = vec![1e-4];
    let table = run_figure1(&config).map_err(|e| e.to_string())?;
    let n = 1000.0;
    let (mle, mle_se) = metric(&table, "sample_max", 1000, "eps_sensitivity")?;
    let (ble, ble_se) = metric(&table, "ble_uniform_scale", 1000, "eps_sensitivity")?;
    let (wpe, wpe_se) = metric(&table, "wpe_uniform_scale", 1000, "eps_sensitivity")?;
    let (wpe_var, wpe_var_se) = metric(&table, "wpe_uniform_scale", 1000, "variance")?;
    let (ble_var, ble_var_se) = metric(&table, "ble_uniform_scale", 1000, "variance")?;
    let ok = (0.95..=1.05).contains(&mle) || within(mle, mle_se, 1.0, 0.05);
    let ok = ok
        && within(ble, ble_se, 4.0 / n, 0.05)
        && within(wpe, wpe_se, 3.0 / n, 0.07)
        && within(wpe_var, wpe_var_se, 2e-4, 0.07)
        && within(ble_var, ble_var_se, 1.0 / (3.0 * n), 0.05);
    check(
        ok,
        format!("Sen_eps mle={mle:.4} ble={ble:.3e} wpe={wpe:.3e}; Var wpe={wpe_var:.3e} ble={ble_var:.3e}"),
    )
}

fn exact_gaps() -> Outcome {
    let opts = FamilyOptions::default();
    let mut worst = 0.0f64;

    let loc = build_family("location:gaussian", &opts).map_err(|e| e.to_string())?;
    let mean = build_estimator("sample_mean", Some(&loc), &EstimatorOptions::default()).map_err(|e| e.to_string())?;
    for seed in 0..3 {
        let s = loc.sample(&[0.3], 40, &mut RngStream::new(seed, 0)).map_err(|e| e.to_string())?;
        let c = cosensitivity_at(&*mean, &s).map_err(|e| e.to_string())?;
        worst = worst.max((c[(0, 0)] - 1.0 / 40.0).abs());
    }

    let reg = build_family("regression", &opts).map_err(|e| e.to_string())?;
    let design = RegressionFamily::default_design();
    let ols = Ols::new(&design).map_err(|e| e.to_string())?;
    let s = reg.sample(&[1.0, -0.5, 0.25], 50, &mut RngStream::new(5, 0)).map_err(|e| e.to_string())?;
    let c = cosensitivity_at(&ols, &s).map_err(|e| e.to_string())?;
    let wtw_inv = (design.transpose() * &design).try_inverse().ok_or("singular design")?;
    worst = worst.max((c - wtw_inv).amax());

    let lap = build_family("location:laplace", &opts).map_err(|e| e.to_string())?;
    let median = SampleMedian;
    let mut sens = Vec::new();
    for (n, expect) in [(100usize, 0.5), (101, 1.0)] {
        let s = lap.sample(&[0.0], n, &mut RngStream::new(9, n as u64)).map_err(|e| e.to_string())?;
        let v = cosensitivity_at(&median, &s).map_err(|e| e.to_string())?[(0, 0)];
        worst = worst.max((v - expect).abs());
        sens.push(v);
    }
    check(worst <= 1e-12, format!("max deviation {worst:.1e}; median Sen n=100 {} n=101 {}", sens[0], sens[1]))
}

fn wcr_suite() -> Outcome {
    let config = ExperimentConfig::new(ExperimentKind::Bound, 77);
    let reports = run_bound_check(&config).map_err(|e| e.to_string())?;
    let failing: Vec<String> = reports
        .iter()
        .filter(|r| !r.holds())
        .map(|r| format!("{}/{} gap {:.2e} tol {:.2e}", r.family, r.estimator, r.gap_min_eigenvalue, r.tolerance))
        .collect();
    let worst = reports
        .iter()
        .map(|r| r.gap_min_eigenvalue / r.tolerance)
        .fold(f64::INFINITY, f64::min);
    check(
        failing.is_empty(),
        format!("{} cases, min gap/tolerance {worst:.2}{}", reports.len(), if failing.is_empty() { String::new() } else { format!("; failing {failing:?}") }),
    )
}

fn information() -> Outcome {
    let opts = FamilyOptions::default();
    let mut worst = 0.0f64;
    for id in ["location:gaussian", "location:laplace", "scale:gaussian", "scale:laplace", "uniform-scale", "gauss2"] {
        let f = build_family(id, &opts).map_err(|e| e.to_string())?;
        let thetas = f.reference_thetas();
        if thetas.len() < 5 {
            return Err(format!("{id} has only {} reference points", thetas.len()));
        }
        for t in thetas.iter().take(5) {
            let closed = f.info_closed_form(t).ok_or(format!("{id} has no closed form"))?;
            let quad = wasserstein_information_quadrature(&*f, t).map_err(|e| e.to_string())?.matrix;
            worst = worst.max((&quad - &closed).norm() / closed.norm());
        }
    }
    let pareto = build_family("pareto", &opts).map_err(|e| e.to_string())?;
    let mut worst_pareto = 0.0f64;
    for t in pareto.reference_thetas().into_iter().map(|t| t[0]) {
        let quad = wasserstein_information(&*pareto, &[t]).map_err(|e| e.to_string())?.matrix[(0, 0)];
        let quad_generic = wasserstein_information_quadrature(&*pareto, &[t]).map_err(|e| e.to_string())?.matrix[(0, 0)];
        let brute = pareto_brute_force(t);
        worst_pareto = worst_pareto.max(((quad - brute) / brute).abs()).max(((quad_generic - brute) / brute).abs());
    }
    check(
        worst <= 1e-6 && worst_pareto <= 1e-6,
        format!("closed-form rel err {worst:.1e}; pareto rel err {worst_pareto:.1e}"),
    )
}

/// `∫₁^∞ (x ln x / θ)² θ x^{-θ-1} dx`, composite Simpson in `y = ln x`.
fn pareto_brute_force(t: f64) -> f64 {
    let integrand = |y: f64| (y * y / (t * t)) * t * ((2.0 - t) * y).exp();
    let upper = 80.0 / (t - 2.0);
    let m = 400_000;
    let h = upper / m as f64;
    let mut s = integrand(0.0) + integrand(upper);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i as f64 * h);
    }
    s * h / 3.0
}

fn wpe_efficiency() -> Outcome {
    let mut config = ExperimentConfig::new(ExperimentKind::WpeSweep, 31);
    config.n_grid = vec![1000, 10_000];
    config.reps = 500;
    let table = run_wpe_sweep(&config).map_err(|e| e.to_string())?;
    let (s3, se3) = metric(&table, "wpe_1d", 1000, "n_sensitivity")?;
    let (s4, _) = metric(&table, "wpe_1d", 10_000, "n_sensitivity")?;
    let (d3, d4) = ((s3 - 3.0).abs(), (s4 - 3.0).abs());
    check(
        within(s3, se3, 3.0, 0.05) && d4 <= d3,
        format!("n Sen at 1e3 = {s3:.6}, at 1e4 = {s4:.6}; deviations {d3:.2e} >= {d4:.2e}"),
    )
}

fn wpe_clt() -> Outcome {
    let mut config = ExperimentConfig::new(ExperimentKind::Clt, 4242);
    config.n_grid = vec![2000];
    let table = run_clt_check(&config).map_err(|e| e.to_string())?;
    let (v, se) = metric(&table, "wpe_1d", 2000, "scaled_variance")?;
    check(within(v, se, 0.2, 0.10), format!("Var √n(θ̂-1) = {v:.4} ± {se:.4}, target 0.2"))
}

fn planar(id: &str) -> Result<Arc<dyn Family>, String> {
    build_family(id, &FamilyOptions::default()).map_err(|e| e.to_string())
}

fn as_planar(f: &Arc<dyn Family>) -> Result<&dyn PlanarFamily, String> {
    f.planar().ok_or_else(|| format!("{} is not planar", f.id()))
}

fn sdot_engine() -> Outcome {
    let fam = planar("plane:uniform")?;
    let pf = as_planar(&fam)?;
    let sites = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]];
    let r = solve_dual(pf, 0.0, &sites, &DualOptions::default(), None).map_err(|e| e.to_string())?;
    let bmax = r.weights.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let mass_err = r.masses.iter().fold(0.0f64, |m, v| m.max((v - 0.25).abs()));
    let ok_sym = bmax < 1e-10
        && (r.w2sq - 1.0 / 24.0).abs() <= 1e-8
        && mass_err <= 1e-10
        && (r.dual_value - r.w2sq).abs() <= 1e-8;

    let mut rng = RngStream::new(8, 0);
    let mut worst = 0.0f64;
    for n in 2..=8 {
        let sites: Vec<Point> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let r = solve_dual(pf, 0.0, &sites, &DualOptions::default(), None).map_err(|e| e.to_string())?;
        let grid = grid_transport_cost(&sites, 200);
        if (r.dual_value - r.w2sq).abs() > 1e-8 {
            return Err(format!("dual {} vs primal {} at n = {n}", r.dual_value, r.w2sq));
        }
        worst = worst.max(((r.w2sq - grid) / grid).abs());
    }
    check(
        ok_sym && worst <= 0.01,
        format!("|b|∞ {bmax:.1e}, w2sq-1/24 {:.1e}, mass err {mass_err:.1e}; grid oracle rel err {worst:.2e}", r.w2sq - 1.0 / 24.0),
    )
}

/// Exact transport cost from the `m x m` grid of cell centres (uniform weights)
/// to equal-mass sites, by Gauss–Seidel balancing of the discrete dual weights.
fn grid_transport_cost(sites: &[Point], m: usize) -> f64 {
    let n = sites.len();
    let atoms: Vec<Point> = (0..m * m)
        .map(|k| [((k % m) as f64 + 0.5) / m as f64, ((k / m) as f64 + 0.5) / m as f64])
        .collect();
    let total = atoms.len();
    let quota: Vec<usize> = (0..n).map(|i| (i + 1) * total / n - i * total / n).collect();
    let cost: Vec<Vec<f64>> = sites
        .iter()
        .map(|s| atoms.iter().map(|a| (a[0] - s[0]).powi(2) + (a[1] - s[1]).powi(2)).collect())
        .collect();
    let mut b = vec![0.0; n];
    let assign = |b: &[f64]| -> Vec<usize> {
        (0..total)
            .map(|j| (0..n).min_by(|&p, &q| (cost[p][j] - b[p]).total_cmp(&(cost[q][j] - b[q]))).unwrap())
            .collect()
    };
    for _ in 0..2000 {
        for i in 0..n {
            let mut thresholds: Vec<f64> = (0..total)
                .map(|j| {
                    let others = (0..n).filter(|&k| k != i).map(|k| cost[k][j] - b[k]).fold(f64::INFINITY, f64::min);
                    cost[i][j] - others
                })
                .collect();
            thresholds.sort_by(f64::total_cmp);
            let k = quota[i];
            b[i] = 0.5 * (thresholds[k - 1] + thresholds[k.min(total - 1)]);
        }
        let a = assign(&b);
        let mut counts = vec![0usize; n];
        for &i in &a {
            counts[i] += 1;
        }
        if counts == quota {
            return a.iter().enumerate().map(|(j, &i)| cost[i][j]).sum::<f64>() / total as f64;
        }
    }
    let a = assign(&b);
    a.iter().enumerate().map(|(j, &i)| cost[i][j]).sum::<f64>() / total as f64
}

fn derivatives() -> Outcome {
    let tight = DualOptions { tol: Some(1e-12), ..Default::default() };
    let mut rng = RngStream::new(2025, 0);
    let mut worst = [0.0f64; 3];
    for trial in 0..10 {
        let (id, theta) = if trial % 2 == 0 {
            ("plane:tilt", rng.random_range(-1.2..1.2))
        } else {
            ("plane:tgauss-scale", rng.random_range(0.4..1.2))
        };
        let fam = planar(id)?;
        let pf = as_planar(&fam)?;
        let n = rng.random_range(3..=7usize);
        let sites = random_sites(pf, theta, n, &mut rng);
        let solve = |t: f64, s: &[Point]| solve_dual(pf, t, s, &tight, None).map_err(|e| e.to_string());
        let base = solve(theta, &sites)?;
        let h = 1e-4;

        let fd = (solve(theta + h, &sites)?.w2sq - solve(theta - h, &sites)?.w2sq) / (2.0 * h);
        worst[0] = worst[0].max((dtheta_w2sq(pf, theta, &base) - fd).abs());

        let i = trial % n;
        let analytic = grad_xi_w2sq(pf, theta, &base, i);
        for c in 0..2 {
            let mut up = sites.clone();
            let mut down = sites.clone();
            up[i][c] += h;
            down[i][c] -= h;
            let fd = (solve(theta, &up)?.w2sq - solve(theta, &down)?.w2sq) / (2.0 * h);
            worst[1] = worst[1].max((analytic[c] - fd).abs());
        }

        let mixed = mixed_derivative_xi_theta(pf, theta, &base, i).map_err(|e| e.to_string())?;
        let g_up = grad_xi_w2sq(pf, theta + h, &solve(theta + h, &sites)?, i);
        let g_down = grad_xi_w2sq(pf, theta - h, &solve(theta - h, &sites)?, i);
        for c in 0..2 {
            worst[2] = worst[2].max((mixed[c] - (g_up[c] - g_down[c]) / (2.0 * h)).abs());
        }
    }
    check(
        worst.iter().all(|w| *w <= 1e-4),
        format!("max |analytic - FD|: dθ {:.1e}, ∇x {:.1e}, mixed {:.1e}", worst[0], worst[1], worst[2]),
    )
}

fn random_sites(pf: &dyn PlanarFamily, theta: f64, n: usize, rng: &mut RngStream) -> Vec<Point> {
    let v = pf.support(theta).vertices().to_vec();
    let (lo, hi) = v.iter().fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), p| {
        ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
    });
    (0..n)
        .map(|_| {
            [
                lo[0] + (hi[0] - lo[0]) * rng.random_range(0.1..0.9),
                lo[1] + (hi[1] - lo[1]) * rng.random_range(0.1..0.9),
            ]
        })
        .collect()
}

fn wpe_location_2d() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..20usize {
        let (id, axis) = if k % 2 == 0 { ("plane:location:x", 0) } else { ("plane:location:y", 1) };
        let fam = planar(id)?;
        let pf = as_planar(&fam)?;
        let theta = 0.3 * k as f64 - 2.0;
        let sample: Sample = fam.sample(&[theta], 64, &mut RngStream::new(900 + k as u64, 0)).map_err(|e| e.to_string())?;
        let fit = wpe_2d(pf, &sample, None).map_err(|e| e.to_string())?;
        let mean = sample.rows().map(|r| r[axis]).sum::<f64>() / 64.0;
        worst = worst.max((fit.theta_hat[0] - mean).abs());
    }
    check(worst <= 1e-4, format!("max |θ̂ - mean| over 20 samples {worst:.1e}"))
}

fn eps_convergence() -> Outcome {
    let fam = build_family("uniform-scale", &FamilyOptions::default()).map_err(|e| e.to_string())?;
    let est = build_estimator("sample_max", Some(&fam), &EstimatorOptions::default()).map_err(|e| e.to_string())?;
    let mut values = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let r = eps_sensitivity_mc(&*fam, &[1.0], &*est, 100, eps, 20_000, 606).map_err(|e| e.to_string())?;
        values.push(r.sensitivity());
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - 1.0).abs()).collect();
    check(
        dev[0] > dev[1] && dev[1] > dev[2] && dev[2] <= 0.05,
        format!("Sen_eps at 1e-2, 1e-3, 1e-4 = {:.4}, {:.4}, {:.4}", values[0], values[1], values[2]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("uniform scale sensitivity and variance at n=1000", figure1),
        ("exact efficiency zero gaps", exact_gaps),
        ("WCR inequality across the bound suite", wcr_suite),
        ("information quadrature vs closed forms", information),
        ("projection estimator efficiency limit", wpe_efficiency),
        ("projection estimator CLT variance", wpe_clt),
        ("semi-discrete engine", sdot_engine),
        ("semi-discrete derivative formulas", derivatives),
        ("planar location projection fit", wpe_location_2d),
        ("eps-sensitivity convergence", eps_convergence),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:2} PASS  {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2} FAIL  {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
