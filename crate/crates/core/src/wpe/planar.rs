use super::{WpeFit, WpeMethod, WpeOptions};
use crate::error::{Error, Result};
use crate::families::Family;
use crate::sample::Sample;
use crate::sdot2d::{dtheta_w2sq, mixed_derivatives, solve_dual, DualOptions, DualSolveResult, PlanarFamily, Point};

/// A planar projection fit with the dual solution at `θ̂`.
#[derive(Clone, Debug)]
pub struct Wpe2dFit {
    pub fit: WpeFit,
    pub solve: DualSolveResult,
}

/// Dual solves along a sequence of `θ`, each warm-started from the last.
struct Tracker<'a> {
    family: &'a dyn PlanarFamily,
    sites: Vec<Point>,
    options: &'a DualOptions,
    weights: Option<Vec<f64>>,
    solves: usize,
}

impl Tracker<'_> {
    fn solve(&mut self, theta: f64) -> Result<DualSolveResult> {
        let fam: &dyn Family = self.family;
        if !fam.domain().contains(&[theta]) {
            return Err(Error::OutOfDomain { family: fam.id().to_string(), theta: vec![theta] });
        }
        let r = solve_dual(self.family, theta, &self.sites, self.options, self.weights.as_deref())?;
        self.weights = Some(r.weights.clone());
        self.solves += 1;
        Ok(r)
    }

    fn slope(&mut self, theta: f64) -> Result<(f64, DualSolveResult)> {
        let r = self.solve(theta)?;
        let d = dtheta_w2sq(self.family, theta, &r);
        if !d.is_finite() {
            return Err(Error::Numeric(format!("non-finite ∂θ W₂² at θ = {theta}")));
        }
        Ok((d, r))
    }
}

fn planar_window(family: &dyn PlanarFamily, sample: &Sample) -> Result<(f64, f64)> {
    let fam: &dyn Family = family;
    let pilot = fam
        .pilot_estimate(sample)
        .ok_or_else(|| Error::Unsupported(format!("family `{}` has no pilot estimate", fam.id())))?[0];
    let xs = sample.as_slice();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64).sqrt();
    let dom = fam.domain();
    let half = 0.5 * pilot.abs().max(sd).max(1e-8);
    let margin = |b: f64| 1e-9 * (1.0 + b.abs());
    Ok(((pilot - half).max(dom.lower[0] + margin(dom.lower[0])), (pilot + half).min(dom.upper[0] - margin(dom.upper[0]))))
}

pub fn wpe_2d(family: &dyn PlanarFamily, sample: &Sample, window: Option<(f64, f64)>) -> Result<WpeFit> {
    let options = WpeOptions { window: window.map(|w| vec![w]), grid: 9, ..Default::default() };
    wpe_2d_with(family, sample, &options, &DualOptions::default()).map(|f| f.fit)
}

/// Minimizes `θ ↦ W₂²(P_θ, P̄_n)` by a grid scan of `∂θ W₂²` followed by
/// Brent's method inside the first sign change from negative to positive.
pub fn wpe_2d_with(
    family: &dyn PlanarFamily,
    sample: &Sample,
    options: &WpeOptions,
    dual: &DualOptions,
) -> Result<Wpe2dFit> {
    let fam: &dyn Family = family;
    if sample.dim() != 2 || fam.param_dim() != 1 {
        return Err(Error::Unsupported(format!("planar projection fit for `{}`", fam.id())));
    }
    let (lo, hi) = match &options.window {
        Some(w) if w.len() == 1 => w[0],
        Some(w) => return Err(Error::Config(format!("window has {} coordinates, expected 1", w.len()))),
        None => planar_window(family, sample)?,
    };
    if !(lo < hi) {
        return Err(Error::EstimationWindow { lo, hi });
    }
    let mut tracker = Tracker { family, sites: sample.points2(), options: dual, weights: None, solves: 0 };
    let m = options.grid.max(2);
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    // scan from the centre outwards so warm starts stay close
    let grid: Vec<f64> = (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect();
    for &t in &grid {
        let (d, _) = tracker.slope(t)?;
        if d == 0.0 {
            bracket = Some(((t, d), (t, d)));
            break;
        }
        if let Some((pt, pd)) = prev {
            if pd < 0.0 && d > 0.0 {
                bracket = Some(((pt, pd), (t, d)));
                break;
            }
        }
        prev = Some((t, d));
    }
    let Some(((a, fa), (b, fb))) = bracket else {
        return Err(Error::EstimationWindow { lo, hi });
    };
    let theta = if a == b { a } else { brent(&mut tracker, a, fa, b, fb, options.max_iter)? };
    let (d, solve) = tracker.slope(theta)?;
    Ok(Wpe2dFit {
        fit: WpeFit {
            theta_hat: vec![theta],
            objective: solve.w2sq,
            first_order_residual: d.abs(),
            iterations: tracker.solves,
            method: WpeMethod::Bracketing,
        },
        solve,
    })
}

/// Brent's zero finder on `∂θ W₂²` with `f(a) < 0 < f(b)`.
fn brent(tr: &mut Tracker, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, max_iter: usize) -> Result<f64> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-13;
        let mid = 0.5 * (c - b);
        if mid.abs() <= tol || fb.abs() < 1e-12 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * mid * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * mid * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * mid * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = mid;
                e = d;
            }
        } else {
            d = mid;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(mid) };
        fb = tr.slope(b)?.0;
    }
    Err(Error::NonConvergence { iterations: max_iter, grad_norm: fb.abs() })
}

/// `∂θ̂/∂x_i = −(∂²_θ W₂²)⁻¹ ∂²_{x_i θ} W₂²`, with the curvature in `θ` by
/// central differences of `∂θ W₂²`.
pub fn wpe_2d_gradients(family: &dyn PlanarFamily, fit: &Wpe2dFit, dual: &DualOptions) -> Result<Vec<Point>> {
    let theta = fit.fit.theta_hat[0];
    let sites = fit.solve.diagram.sites.clone();
    let mut tracker = Tracker { family, sites, options: dual, weights: Some(fit.solve.weights.clone()), solves: 0 };
    let h = 1e-5 * (1.0 + theta.abs());
    let up = tracker.slope(theta + h)?.0;
    tracker.weights = Some(fit.solve.weights.clone());
    let down = tracker.slope(theta - h)?.0;
    let curvature = (up - down) / (2.0 * h);
    if !(curvature > 0.0) {
        return Err(Error::DegenerateInformation(format!("curvature {curvature} of W₂² in θ at the fit")));
    }
    let mixed = mixed_derivatives(family, theta, &fit.solve)?;
    Ok(mixed.into_iter().map(|g| [-g[0] / curvature, -g[1] / curvature]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::sdot2d::build_planar_family;

    #[test]
    fn planar_location_fit_is_the_mean() {
        for (id, axis) in [("plane:location:x", 0), ("plane:location:y", 1)] {
            let f = build_planar_family(id).unwrap();
            let s = f.sample(&[0.3], 64, &mut RngStream::new(9, axis as u64)).unwrap();
            let fit = wpe_2d(f.planar().unwrap(), &s, None).unwrap();
            let mean = s.rows().map(|r| r[axis]).sum::<f64>() / 64.0;
            assert!((fit.theta_hat[0] - mean).abs() < 1e-4, "{id}: {} vs {mean}", fit.theta_hat[0]);
        }
    }

    #[test]
    fn centred_single_point() {
        let f = build_planar_family("plane:location:x").unwrap();
        let s = Sample::from_points(&[[0.25, 0.0]]);
        let fit = wpe_2d(f.planar().unwrap(), &s, Some((-0.5, 1.0))).unwrap();
        assert!((fit.theta_hat[0] - 0.25).abs() < 1e-8);
    }

    #[test]
    fn gradients_match_refits() {
        let f = build_planar_family("plane:tilt").unwrap();
        let pf = f.planar().unwrap();
        let s = f.sample(&[0.8], 12, &mut RngStream::new(4, 0)).unwrap();
        let dual = DualOptions::default();
        let opts = WpeOptions { window: Some(vec![(-1.9, 1.9)]), grid: 9, ..Default::default() };
        let fit = wpe_2d_with(pf, &s, &opts, &dual).unwrap();
        let grads = wpe_2d_gradients(pf, &fit, &dual).unwrap();
        for i in [0, 5, 11] {
            for a in 0..2 {
                let h = 1e-5;
                let refit = |v: f64| {
                    let mut t = s.clone();
                    t.row_mut(i)[a] = v;
                    wpe_2d_with(pf, &t, &opts, &dual).unwrap().fit.theta_hat[0]
                };
                let x = s.row(i)[a];
                let fd = (refit(x + h) - refit(x - h)) / (2.0 * h);
                assert!((fd - grads[i][a]).abs() < 1e-3 * (1.0 + fd.abs()), "{i},{a}: {fd} vs {}", grads[i][a]);
            }
        }
    }
}
