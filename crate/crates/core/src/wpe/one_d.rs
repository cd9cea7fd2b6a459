use super::{WpeFit, WpeMethod, WpeOptions};
use crate::error::{Error, Result};
use crate::families::{quantile_gradient, quantile_hessian, Family, Prob};
use crate::ot1d::{for_each_interval_node, EmpiricalQuantile};
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};

/// `G_n(θ) = ∫₀¹ |H(θ, u) − F̄_n⁻¹(u)|² du` with `H(θ, ·) = F_θ⁻¹`, and its
/// first two derivatives, all on the same per-interval quadrature.
pub struct WpeObjective<'a> {
    family: &'a dyn Family,
    empirical: EmpiricalQuantile,
}

/// Value, gradient and `M = ½ ∇²G`.
pub(crate) struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub m: DMatrix<f64>,
    /// `∫ ∇H ∇Hᵀ`, the Gauss–Newton part of `M`.
    pub gauss_newton: DMatrix<f64>,
}

impl<'a> WpeObjective<'a> {
    pub fn new(family: &'a dyn Family, sample: &Sample) -> Result<Self> {
        if sample.dim() != 1 || family.data_dim() != 1 {
            return Err(Error::Unsupported(format!("one dimensional projection fit for `{}`", family.id())));
        }
        Ok(Self { family, empirical: EmpiricalQuantile::new(sample.as_slice())? })
    }

    pub fn empirical(&self) -> &EmpiricalQuantile {
        &self.empirical
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.evaluate(theta, 0).map(|e| e.value)
    }

    pub fn gradient(&self, theta: &[f64]) -> Result<DVector<f64>> {
        self.evaluate(theta, 1).map(|e| e.gradient)
    }

    pub(crate) fn evaluate(&self, theta: &[f64], order: usize) -> Result<Evaluation> {
        let p = theta.len();
        if !self.family.domain().contains(theta) {
            return Err(Error::OutOfDomain { family: self.family.id().to_string(), theta: theta.to_vec() });
        }
        let xs = self.empirical.sorted_values();
        let mut e = Evaluation {
            value: 0.0,
            gradient: DVector::zeros(p),
            m: DMatrix::zeros(p, p),
            gauss_newton: DMatrix::zeros(p, p),
        };
        let mut failure = None;
        for_each_interval_node(self.empirical.n(), |i, u, w| {
            if failure.is_some() {
                return;
            }
            let q = match self.family.quantile(theta, u) {
                Some(q) if q.is_finite() => q,
                _ => {
                    failure = Some(u);
                    return;
                }
            };
            let r = q - xs[i];
            e.value += w * r * r;
            if order == 0 {
                return;
            }
            let Some((g, _)) = quantile_gradient(self.family, theta, u) else {
                failure = Some(u);
                return;
            };
            e.gradient.axpy(2.0 * w * r, &g, 1.0);
            if order >= 2 {
                let Some(h) = quantile_hessian(self.family, theta, u) else {
                    failure = Some(u);
                    return;
                };
                let gg = &g * g.transpose();
                e.m += w * (&gg + r * h);
                e.gauss_newton += w * gg;
            }
        });
        if let Some(u) = failure {
            return Err(Error::Domain(format!(
                "quantile of `{}` unavailable at θ = {theta:?}, u = {}",
                self.family.id(),
                u.lower()
            )));
        }
        if !e.value.is_finite() || e.gradient.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite projection objective at θ = {theta:?}")));
        }
        Ok(e)
    }

    /// Scale for gradient tolerances: `1 + ∫ (F̄_n⁻¹)²`.
    fn scale(&self) -> f64 {
        let xs = self.empirical.sorted_values();
        1.0 + xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
    }
}

/// A band of half-width `½ max(|pilot|, sd)` around the pilot estimate, clipped to the domain.
pub fn default_window(family: &dyn Family, sample: &Sample) -> Result<Vec<(f64, f64)>> {
    let pilot = family
        .pilot_estimate(sample)
        .ok_or_else(|| Error::Unsupported(format!("family `{}` has no pilot estimate", family.id())))?;
    let xs = sample.as_slice();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64).sqrt();
    let dom = family.domain();
    Ok(pilot
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let half = 0.5 * t.abs().max(sd).max(1e-8);
            let margin = |b: f64| 1e-9 * (1.0 + b.abs());
            let lo = (t - half).max(dom.lower[j] + margin(dom.lower[j]));
            let hi = (t + half).min(dom.upper[j] - margin(dom.upper[j]));
            (lo, hi)
        })
        .collect())
}

pub fn wpe_1d(family: &dyn Family, sample: &Sample) -> Result<WpeFit> {
    wpe_1d_with(family, sample, &WpeOptions::default())
}

pub fn wpe_1d_with(family: &dyn Family, sample: &Sample, options: &WpeOptions) -> Result<WpeFit> {
    let objective = WpeObjective::new(family, sample)?;
    let window = match &options.window {
        Some(w) => w.clone(),
        None => default_window(family, sample)?,
    };
    if window.len() != family.param_dim() {
        return Err(Error::Config(format!("window has {} coordinates, family has {}", window.len(), family.param_dim())));
    }
    if window.len() == 1 {
        fit_scalar(&objective, window[0], options)
    } else {
        let pilot = family.pilot_estimate(sample).unwrap_or_else(|| window.iter().map(|w| 0.5 * (w.0 + w.1)).collect());
        fit_multi(&objective, &window, &pilot, options)
    }
}

fn fit_scalar(obj: &WpeObjective, (lo, hi): (f64, f64), options: &WpeOptions) -> Result<WpeFit> {
    if !(lo < hi) {
        return Err(Error::EstimationWindow { lo, hi });
    }
    let m = options.grid.max(2);
    let grid: Vec<f64> = (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect();
    let slopes = grid.iter().map(|&t| obj.gradient(&[t]).map(|g| g[0])).collect::<Result<Vec<_>>>()?;
    let mut brackets = Vec::new();
    for j in 0..m - 1 {
        if slopes[j] <= 0.0 && slopes[j + 1] > 0.0 {
            brackets.push((grid[j], grid[j + 1]));
        }
    }
    if slopes[m - 1] == 0.0 {
        brackets.push((grid[m - 1], grid[m - 1]));
    }
    if brackets.is_empty() {
        return Err(Error::EstimationWindow { lo, hi });
    }
    let mut best: Option<WpeFit> = None;
    for (a, b) in brackets {
        let fit = refine_scalar(obj, a, b, options.max_iter)?;
        if best.as_ref().is_none_or(|f| fit.objective < f.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one bracket"))
}

/// Safeguarded Newton on `G'` inside a sign-change bracket; golden section
/// on `G` if derivatives break down.
fn refine_scalar(obj: &WpeObjective, mut a: f64, mut b: f64, max_iter: usize) -> Result<WpeFit> {
    let tol = 1e-13 * obj.scale();
    let mut t = 0.5 * (a + b);
    for it in 1..=max_iter {
        let e = match obj.evaluate(&[t], 2) {
            Ok(e) if e.m[(0, 0)].is_finite() => e,
            _ => return golden_section(obj, a, b, it),
        };
        let g = e.gradient[0];
        if g.abs() <= tol || b - a <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
            return Ok(WpeFit {
                theta_hat: vec![t],
                objective: e.value,
                first_order_residual: g.abs(),
                iterations: it,
                method: WpeMethod::Newton,
            });
        }
        if g < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let m = e.m[(0, 0)];
        let newton = t - g / (2.0 * m);
        t = if m > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
    }
    golden_section(obj, a, b, max_iter)
}

fn golden_section(obj: &WpeObjective, mut a: f64, mut b: f64, spent: usize) -> Result<WpeFit> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (obj.value(&[c])?, obj.value(&[d])?);
    let mut it = spent;
    while b - a > 1e-12 * (1.0 + a.abs()) && it < spent + 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = obj.value(&[c])?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = obj.value(&[d])?;
        }
        it += 1;
    }
    let t = 0.5 * (a + b);
    let e = obj.evaluate(&[t], 1)?;
    Ok(WpeFit {
        theta_hat: vec![t],
        objective: e.value,
        first_order_residual: e.gradient[0].abs(),
        iterations: it,
        method: WpeMethod::GoldenSection,
    })
}

/// Damped Newton from the pilot and from points a quarter window away in each coordinate.
fn fit_multi(obj: &WpeObjective, window: &[(f64, f64)], pilot: &[f64], options: &WpeOptions) -> Result<WpeFit> {
    let p = window.len();
    let inside = |t: &[f64]| obj.family.domain().contains(t);
    let mut starts = vec![pilot.to_vec()];
    for j in 0..p {
        for s in [-0.25, 0.25] {
            let mut t = pilot.to_vec();
            t[j] += s * (window[j].1 - window[j].0);
            if inside(&t) {
                starts.push(t);
            }
        }
    }
    let tol = 1e-13 * obj.scale();
    let mut best: Option<WpeFit> = None;
    for start in starts {
        let Ok(mut e) = obj.evaluate(&start, 2) else { continue };
        let mut t = start;
        let mut it = 0;
        while it < options.max_iter && e.gradient.norm() > tol {
            it += 1;
            let step = match (2.0 * &e.m).cholesky() {
                Some(c) => c.solve(&-&e.gradient),
                None => match (2.0 * &e.gauss_newton).cholesky() {
                    Some(c) => c.solve(&-&e.gradient),
                    None => -&e.gradient,
                },
            };
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = t.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
                if inside(&trial) {
                    if let Ok(te) = obj.evaluate(&trial, 2) {
                        if te.value <= e.value || te.gradient.norm() < e.gradient.norm() {
                            accepted = Some((trial, te));
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((nt, ne)) => {
                    let moved = nt.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    t = nt;
                    e = ne;
                    if moved <= 4.0 * f64::EPSILON * (1.0 + t.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                        break;
                    }
                }
                None => break,
            }
        }
        let fit = WpeFit {
            theta_hat: t,
            objective: e.value,
            first_order_residual: e.gradient.norm(),
            iterations: it,
            method: WpeMethod::QuasiNewton,
        };
        if best.as_ref().is_none_or(|f| fit.objective < f.objective) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::EstimationWindow { lo: window[0].0, hi: window[0].1 })
}

/// `∂θ̂/∂x_i = M̂⁻¹ ∫_{(τ(i)−1)/n}^{τ(i)/n} ∇_θH(θ̂, u) du`, in sample order.
pub fn wpe_gradients_1d(family: &dyn Family, sample: &Sample, fit: &WpeFit) -> Result<Vec<DVector<f64>>> {
    let obj = WpeObjective::new(family, sample)?;
    let theta = &fit.theta_hat;
    let p = theta.len();
    let n = sample.n();
    let m = obj.evaluate(theta, 2)?.m;
    let mut per_rank = vec![DVector::<f64>::zeros(p); n];
    let mut failure = false;
    for_each_interval_node(n, |i, u, w| match quantile_gradient(family, theta, u) {
        Some((g, _)) => per_rank[i].axpy(w, &g, 1.0),
        None => failure = true,
    });
    if failure {
        return Err(Error::Domain(format!("quantile gradient of `{}` unavailable", family.id())));
    }
    let lu = m.clone().lu();
    let singular = || Error::DegenerateInformation(format!("projection Hessian {m} is singular"));
    if m.iter().any(|v| !v.is_finite()) || m.determinant().abs() <= f64::MIN_POSITIVE {
        return Err(singular());
    }
    let mut out = vec![DVector::zeros(p); n];
    for (r, &i) in obj.empirical().order().iter().enumerate() {
        out[i] = lu.solve(&per_rank[r]).ok_or_else(singular)?;
    }
    Ok(out)
}

/// `∫ F̄_n⁻¹ F₁⁻¹ / ∫ |F₁⁻¹|²` on the panels of the empirical quantile.
pub fn wpe_scale_closed_form(base_quantile: &dyn Fn(Prob) -> f64, values: &[f64]) -> Result<f64> {
    let e = EmpiricalQuantile::new(values)?;
    let xs = e.sorted_values();
    let (mut num, mut den) = (0.0, 0.0);
    for_each_interval_node(e.n(), |i, u, w| {
        let q = base_quantile(u);
        num += w * xs[i] * q;
        den += w * q * q;
    });
    if !num.is_finite() || !den.is_finite() {
        return Err(Error::Numeric("non-finite base quantile".into()));
    }
    if den <= 0.0 {
        return Err(Error::DegenerateBase);
    }
    Ok(num / den)
}
