//! One-dimensional optimal transport through quantile functions.

use crate::error::{Error, Result};
use crate::families::{Family, Prob};
use crate::quadrature::gl8;

/// Left-continuous step quantile `F̄_n⁻¹` of an empirical measure.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalQuantile {
    sorted: Vec<f64>,
    /// `order[r]` is the sample index holding rank `r` (stable in ties).
    order: Vec<usize>,
}

impl EmpiricalQuantile {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empirical quantile of an empty sample".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite sample value".into()));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted = order.iter().map(|&i| values[i]).collect();
        Ok(Self { sorted, order })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `X_(i)` on `((i−1)/n, i/n]`, and `X_(1)` at `u = 0`.
    pub fn eval(&self, u: f64) -> f64 {
        let n = self.n();
        let i = (u * n as f64).ceil() as usize;
        self.sorted[i.clamp(1, n) - 1]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.n() as f64
    }
}

/// Calls `f(i, u, weight)` at Gauss–Legendre nodes of every interval
/// `((i−1)/n, i/n]`; `u` carries both tails exactly.
pub(crate) fn for_each_interval_node(n: usize, mut f: impl FnMut(usize, Prob, f64)) {
    let rule = gl8();
    let nf = n as f64;
    for i in 0..n {
        for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
            // nodes on [-1, 1] mapped to [0, 1] within the interval
            let s = 0.5 * (t + 1.0);
            let lower = (i as f64 + s) / nf;
            let upper = ((n - i - 1) as f64 + (1.0 - s)) / nf;
            f(i, Prob::from_parts(lower, upper), 0.5 * w / nf);
        }
    }
}

fn family_quantile(family: &dyn Family, theta: &[f64], u: Prob) -> Result<f64> {
    match family.quantile(theta, u) {
        Some(q) if q.is_finite() => Ok(q),
        Some(q) => Err(Error::Domain(format!("quantile of `{}` is {q} at u = {}", family.id(), u.lower()))),
        None => Err(Error::Unsupported(format!("family `{}` has no quantile function", family.id()))),
    }
}

/// `W₂²(P_θ, P̄_n) = ∫₀¹ |F_θ⁻¹(u) − F̄_n⁻¹(u)|² du`, Gauss–Legendre order 8 per interval.
pub fn w2sq_1d(family: &dyn Family, theta: &[f64], empirical: &EmpiricalQuantile) -> Result<f64> {
    let xs = empirical.sorted_values();
    let mut acc = 0.0;
    let mut err = None;
    for_each_interval_node(empirical.n(), |i, u, w| {
        if err.is_some() {
            return;
        }
        match family_quantile(family, theta, u) {
            Ok(q) => acc += w * (q - xs[i]) * (q - xs[i]),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(acc.max(0.0)),
    }
}

/// `W₂²` between two empirical measures, exact for step quantiles.
pub fn w2sq_empirical(a: &EmpiricalQuantile, b: &EmpiricalQuantile) -> f64 {
    let mut cuts: Vec<f64> = (0..=a.n()).map(|i| i as f64 / a.n() as f64).collect();
    cuts.extend((1..b.n()).map(|i| i as f64 / b.n() as f64));
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let d = a.eval(mid) - b.eval(mid);
            (w[1] - w[0]) * d * d
        })
        .sum()
}

/// `F_B⁻¹(F_A(x))`, the monotone transport map from `P_A` to `P_B`.
pub fn ot_map_1d(family_a: &dyn Family, theta_a: &[f64], family_b: &dyn Family, theta_b: &[f64], x: f64) -> Result<f64> {
    if let Some((lo, hi)) = family_a.support_1d(theta_a) {
        if !(lo..=hi).contains(&x) {
            return Err(Error::Domain(format!("{x} outside the support [{lo}, {hi}] of `{}`", family_a.id())));
        }
    }
    let u = family_a
        .cdf(theta_a, x)
        .ok_or_else(|| Error::Unsupported(format!("family `{}` has no distribution function", family_a.id())))?;
    family_quantile(family_b, theta_b, u)
}

/// A function on `(0, 1)` for [`quantile_inner`].
pub enum QuantileFn<'a> {
    Empirical(&'a EmpiricalQuantile),
    Smooth(&'a dyn Fn(Prob) -> f64),
}

impl QuantileFn<'_> {
    fn eval(&self, u: Prob) -> f64 {
        match self {
            QuantileFn::Empirical(e) => e.eval(u.lower()),
            QuantileFn::Smooth(f) => f(u),
        }
    }
    fn breaks(&self) -> Option<usize> {
        match self {
            QuantileFn::Empirical(e) => Some(e.n()),
            QuantileFn::Smooth(_) => None,
        }
    }
}

/// Panels per unit interval when neither argument has breakpoints.
const SMOOTH_PANELS: usize = 64;

/// `∫₀¹ f(u) g(u) du` on panels aligned with every empirical breakpoint.
pub fn quantile_inner(f: &QuantileFn, g: &QuantileFn) -> Result<f64> {
    let mut acc = 0.0;
    let mut bad = false;
    let mut run = |n: usize| {
        for_each_interval_node(n, |_, u, w| {
            let v = f.eval(u) * g.eval(u);
            bad |= !v.is_finite();
            acc += w * v;
        })
    };
    match (f.breaks(), g.breaks()) {
        (None, None) => run(SMOOTH_PANELS),
        (Some(n), None) | (None, Some(n)) => run(n),
        (Some(a), Some(b)) if a == b => run(a),
        (Some(a), Some(b)) => {
            let (QuantileFn::Empirical(x), QuantileFn::Empirical(y)) = (f, g) else { unreachable!() };
            let mut cuts: Vec<f64> = (0..=a).map(|i| i as f64 / a as f64).collect();
            cuts.extend((1..b).map(|i| i as f64 / b as f64));
            cuts.sort_by(f64::total_cmp);
            acc = cuts
                .windows(2)
                .map(|w| {
                    let mid = 0.5 * (w[0] + w[1]);
                    (w[1] - w[0]) * x.eval(mid) * y.eval(mid)
                })
                .sum();
        }
    }
    if bad || !acc.is_finite() {
        return Err(Error::Numeric("non-finite value in a quantile inner product".into()));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{build_family, FamilyOptions};
    use approx::assert_abs_diff_eq;

    fn fam(id: &str) -> std::sync::Arc<dyn Family> {
        build_family(id, &FamilyOptions::default()).unwrap()
    }

    #[test]
    fn step_quantile_convention() {
        let e = EmpiricalQuantile::new(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.sorted_values(), &[1.0, 2.0, 3.0]);
        assert_eq!(e.order(), &[1, 2, 0]);
        assert_eq!(e.eval(0.0), 1.0);
        assert_eq!(e.eval(1.0 / 3.0), 1.0);
        assert_eq!(e.eval(0.34), 2.0);
        assert_eq!(e.eval(1.0), 3.0);
    }

    #[test]
    fn uniform_against_single_atom() {
        // uniform-scale at θ = 1 is U[0, 1]
        let e = EmpiricalQuantile::new(&[0.5]).unwrap();
        assert_abs_diff_eq!(w2sq_1d(&*fam("uniform-scale"), &[1.0], &e).unwrap(), 1.0 / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn midpoint_quantiles_are_close() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let e = EmpiricalQuantile::new(&xs).unwrap();
        let w = w2sq_1d(&*fam("uniform-scale"), &[1.0], &e).unwrap();
        assert!(w < 1e-3 && w >= 0.0);
    }

    #[test]
    fn transport_maps() {
        let loc = fam("location:gaussian");
        assert_abs_diff_eq!(ot_map_1d(&*loc, &[0.5], &*loc, &[2.0], 0.3).unwrap(), 1.8, epsilon = 1e-9);
        let sc = fam("scale:laplace");
        assert_abs_diff_eq!(ot_map_1d(&*sc, &[2.0], &*sc, &[3.0], 0.8).unwrap(), 1.2, epsilon = 1e-9);
        assert_abs_diff_eq!(ot_map_1d(&*sc, &[2.0], &*sc, &[2.0], -0.4).unwrap(), -0.4, epsilon = 1e-12);
        let us = fam("uniform-scale");
        assert!(matches!(ot_map_1d(&*us, &[1.0], &*us, &[2.0], 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn transport_map_is_monotone() {
        let a = fam("location:laplace");
        let b = fam("scale:gaussian");
        let ys: Vec<f64> =
            (0..100).map(|i| ot_map_1d(&*a, &[0.0], &*b, &[1.5], -5.0 + 0.1 * i as f64).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn inner_products() {
        let id = |u: Prob| u.lower();
        let flip = |u: Prob| u.upper();
        let one = |_: Prob| 1.0;
        let f = QuantileFn::Smooth(&id);
        assert_abs_diff_eq!(quantile_inner(&f, &f).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(quantile_inner(&f, &QuantileFn::Smooth(&flip)).unwrap(), 1.0 / 6.0, epsilon = 1e-14);
        let e = EmpiricalQuantile::new(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(
            quantile_inner(&QuantileFn::Empirical(&e), &QuantileFn::Smooth(&one)).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        let e2 = EmpiricalQuantile::new(&[0.0, 1.0]).unwrap();
        // overlap of steps on (0,1/3],(1/3,1/2],(1/2,2/3],(2/3,1]: 0 + 0 + 2/6 + 3/3
        assert_abs_diff_eq!(
            quantile_inner(&QuantileFn::Empirical(&e), &QuantileFn::Empirical(&e2)).unwrap(),
            1.0 / 3.0 + 1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn empirical_triangle_inequality() {
        use crate::rng::RngStream;
        use rand::Rng;
        let mut rng = RngStream::new(7, 0);
        for _ in 0..50 {
            let mut draw = |n: usize| {
                let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                EmpiricalQuantile::new(&xs).unwrap()
            };
            let (a, b, c) = (draw(5), draw(7), draw(3));
            let d = |x: &EmpiricalQuantile, y: &EmpiricalQuantile| w2sq_empirical(x, y).sqrt();
            assert!(d(&a, &b) + d(&b, &c) - d(&a, &c) >= -1e-10);
        }
    }
}
