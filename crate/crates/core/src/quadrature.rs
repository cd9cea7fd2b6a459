//! Gauss–Legendre rules, graded meshes on the unit interval and a triangle rule.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared order-8 rule.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// Shared order-16 rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Composite rule on `[a, b]` with `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussLegendre, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|j| rule.integrate(a + j as f64 * h, a + (j + 1) as f64 * h, &mut f))
        .sum()
}

/// Integrates a smooth function on `[a, b]`, doubling the number of panels
/// until two successive values agree to `tol` (relative to `max(1, |I|)`).
pub fn integrate_interval<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> Result<f64> {
    let rule = gl16();
    let mut panels = 2;
    let mut prev = composite(rule, a, b, panels, &mut f);
    while panels < 1 << 14 {
        panels *= 2;
        let cur = composite(rule, a, b, panels, &mut f);
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence {
        panels,
        previous: vec![prev],
        last: vec![composite(rule, a, b, panels, &mut f)],
    })
}

/// Breakpoints of the half mesh on `[0, 1/2]`, graded dyadically toward 0.
fn graded_breakpoints(levels: u32) -> Vec<f64> {
    let mut pts = vec![0.0];
    pts.extend((2..=levels).rev().map(|j| 0.5f64.powi(j as i32)));
    pts.push(0.5);
    pts
}

/// Nodes `(u, 1 - u, w)` of the graded mesh with `levels` panels per half,
/// each carrying `rule`. Used where a fixed rule is tensorized.
pub fn graded_rule(levels: u32, rule: &GaussLegendre) -> Vec<(f64, f64, f64)> {
    let pts = graded_breakpoints(levels);
    let mut nodes = Vec::with_capacity(2 * levels as usize * rule.order());
    for w in pts.windows(2) {
        for (t, wt) in rule.mapped(w[0], w[1]) {
            nodes.push((t, 1.0 - t, wt));
            nodes.push((1.0 - t, t, wt));
        }
    }
    nodes
}

/// One pass of the graded rule; `f(u, 1 - u, out)` overwrites `out`.
fn graded_pass<F: FnMut(f64, f64, &mut [f64])>(levels: u32, sub: usize, dim: usize, f: &mut F) -> (Vec<f64>, usize) {
    let rule = gl16();
    let pts = graded_breakpoints(levels);
    let mut acc = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    let mut panels = 0;
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        for j in 0..sub {
            let a = w[0] + j as f64 * h;
            panels += 2;
            for (t, wt) in rule.mapped(a, a + h) {
                // left half at u = t, mirrored half at u = 1 - t
                for (u, ubar) in [(t, 1.0 - t), (1.0 - t, t)] {
                    f(u, ubar, &mut buf);
                    for (s, v) in acc.iter_mut().zip(&buf) {
                        *s += wt * v;
                    }
                }
            }
        }
    }
    (acc, panels)
}

/// Integrates a vector-valued function over `(0, 1)` on a mesh graded toward
/// both endpoints, so integrable endpoint singularities are handled. The
/// integrand receives `u` and `1 - u`, the latter exact near `u = 1`. The mesh
/// is refined through `(levels, subpanels) = (20, 1), (40, 2), ...` until two
/// successive results differ by less than `tol * max(1, |I|)` in Euclidean norm.
/// The deep levels matter for singularities like `(1 - u)^{-a}` with `a` near 1,
/// whose tail beyond the finest panel only decays like `2^{-L(1-a)}`.
pub fn integrate_unit_graded<F: FnMut(f64, f64, &mut [f64])>(dim: usize, tol: f64, mut f: F) -> Result<Vec<f64>> {
    let (mut prev, _) = graded_pass(20, 1, dim, &mut f);
    let mut last_panels = 0;
    for k in 1..8u32 {
        let (cur, panels) = graded_pass(20 + 20 * k, k as usize + 1, dim, &mut f);
        last_panels = panels;
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureNonConvergence { panels, previous: prev, last: cur });
        }
        let diff = cur.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = cur.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        if diff < tol * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    let (last, _) = graded_pass(180, 9, dim, &mut f);
    Err(Error::QuadratureNonConvergence {
        panels: last_panels,
        previous: prev,
        last,
    })
}

/// Seven point degree-five triangle rule, barycentric coordinates and weights.
pub const TRIANGLE_RULE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_09;
    const W1: f64 = 0.132_394_152_788_506_18;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_34;
    const W2: f64 = 0.125_939_180_544_827_15;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Integrates `f` over the triangle `(a, b, c)`.
pub fn integrate_triangle<F: FnMut([f64; 2]) -> f64>(a: [f64; 2], b: [f64; 2], c: [f64; 2], mut f: F) -> f64 {
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let mut s = 0.0;
    for (l, w) in TRIANGLE_RULE.iter() {
        let p = [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ];
        s += w * f(p);
    }
    area * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for order in [1usize, 2, 5, 8, 16, 31] {
            let rule = GaussLegendre::new(order);
            assert_relative_eq!(rule.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for deg in 0..(2 * order) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-12, "order {order} deg {deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn graded_rule_handles_endpoint_singularities() {
        // integral of u^{-1/2} + (1-u)^{-1/2} over (0,1) is 4
        let v = integrate_unit_graded(1, 1e-10, |u, ubar, out| out[0] = u.powf(-0.5) + ubar.powf(-0.5)).unwrap();
        assert_relative_eq!(v[0], 4.0, epsilon = 1e-7);
        let v = integrate_unit_graded(1, 1e-12, |u, _, out| out[0] = -u.ln()).unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn interval_rule_converges() {
        let v = integrate_interval(0.0, std::f64::consts::PI, 1e-13, f64::sin).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn triangle_rule_is_exact_to_degree_five() {
        let (a, b, c) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        // integral of x^i y^j over the unit simplex is i! j! / (i + j + 2)!
        let fact = |n: u32| (1..=n).map(|v| v as f64).product::<f64>();
        for i in 0..=5u32 {
            for j in 0..=(5 - i) {
                let got = integrate_triangle(a, b, c, |p| p[0].powi(i as i32) * p[1].powi(j as i32));
                let exact = fact(i) * fact(j) / fact(i + j + 2);
                assert!((got - exact).abs() < 1e-14, "{i} {j}");
            }
        }
    }
}
