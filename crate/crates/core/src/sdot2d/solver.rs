//! Damped Newton ascent on the semi-discrete Kantorovich dual.

use super::geometry::{build_power_diagram, check_sites, norm2, sub, ConvexPolygon, EdgeLabel, Point, PowerDiagram};
use super::integrate::{cell_nodes, edge_nodes, CELL_REFINEMENT};
use super::planar::PlanarFamily;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub type DensityFn<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

#[derive(Clone, Debug)]
pub struct DualOptions {
    /// Stop when `max_i |1/n - m_i|` falls below this; `1e-9 / n` when `None`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Midpoint subdivisions per fan triangle in cell quadrature.
    pub refinement: u32,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self { tol: None, max_iter: 200, refinement: CELL_REFINEMENT }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DualSolveResult {
    /// Dual weights `b`, normalized so that `Σ b_i = 0`.
    pub weights: Vec<f64>,
    pub masses: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    /// `Σ_i ∫_{V_i} ‖x - x_i‖² p`
    pub w2sq: f64,
    /// Dual objective at `b`.
    pub dual_value: f64,
    #[serde(skip)]
    pub diagram: PowerDiagram,
    /// Dual Hessian at `b`.
    #[serde(skip)]
    pub hessian: DMatrix<f64>,
}

struct Evaluation {
    diagram: PowerDiagram,
    masses: Vec<f64>,
    costs: Vec<f64>,
    hessian: DMatrix<f64>,
}

fn evaluate(support: &ConvexPolygon, density: DensityFn, sites: &[Point], b: &[f64], refinement: u32) -> Result<Evaluation> {
    let diagram = build_power_diagram(support, sites, b)?;
    let n = sites.len();
    let mut masses = vec![0.0; n];
    let mut costs = vec![0.0; n];
    let mut hessian = DMatrix::zeros(n, n);
    for (i, cell) in diagram.cells.iter().enumerate() {
        if cell.is_empty() {
            continue;
        }
        let xi = sites[i];
        for (x, w) in cell_nodes(&cell.vertices, refinement) {
            let pw = w * density(x);
            masses[i] += pw;
            costs[i] += pw * norm2(sub(x, xi));
        }
        for (a, c, label) in cell.edges() {
            if let EdgeLabel::Site(j) = label {
                let d = norm2(sub(sites[j], xi)).sqrt();
                let v: f64 = edge_nodes(a, c).map(|(x, w)| w * density(x)).sum::<f64>() / (2.0 * d);
                hessian[(i, j)] += 0.5 * v;
                hessian[(j, i)] += 0.5 * v;
            }
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| hessian[(i, j)]).sum();
        hessian[(i, i)] = -s;
    }
    // The per-cell rules do not sum to one fixed rule on the support, so the
    // quadrature total drifts with b at the level of the rule's error. Working
    // with the density renormalized by that total keeps Σ m_i = 1 exactly and
    // lets the residual go below the quadrature error.
    let total: f64 = masses.iter().sum();
    if total > 0.0 && total.is_finite() {
        masses.iter_mut().chain(costs.iter_mut()).for_each(|v| *v /= total);
        hessian /= total;
    }
    Ok(Evaluation { diagram, masses, costs, hessian })
}

/// Weights under which the power diagram is the Voronoi diagram of the sites
/// shrunk toward the support centroid, so that every cell is nonempty.
fn shrink_initialization(support: &ConvexPolygon, sites: &[Point]) -> Vec<f64> {
    let c = support.centroid();
    let r = support.inradius_at(c);
    let spread = sites.iter().map(|s| norm2(sub(*s, c)).sqrt()).fold(0.0, f64::max);
    let lambda = if spread > 0.0 { (0.5 * r / spread).min(1.0) } else { 1.0 };
    let mut b: Vec<f64> = sites
        .iter()
        .map(|x| {
            let y = [c[0] + lambda * (x[0] - c[0]), c[1] + lambda * (x[1] - c[1])];
            norm2(*x) - norm2(y) / lambda
        })
        .collect();
    center(&mut b);
    b
}

fn center(b: &mut [f64]) {
    let m = b.iter().sum::<f64>() / b.len() as f64;
    for v in b.iter_mut() {
        *v -= m;
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Solves the reduced system `H[..n-1, ..n-1] y = rhs[..n-1]` and pads with a
/// trailing zero. Only differences of the solution are meaningful.
pub(crate) fn solve_reduced(hessian: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let h = hessian.view((0, 0), (n - 1, n - 1)).into_owned();
    let r = DVector::from_column_slice(&rhs[..n - 1]);
    let y = h
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::DegenerateConfiguration("singular dual Hessian".into()))?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateConfiguration("singular dual Hessian".into()));
    }
    let mut out: Vec<f64> = y.iter().copied().collect();
    out.push(0.0);
    Ok(out)
}

/// Maximizes `g(b) = (1/n) Σ b_i + Σ_i ∫_{V_i} (‖x - x_i‖² - b_i) p` over `b`.
///
/// Newton steps are damped by halving until every cell keeps at least half
/// of `min(1/n, initial smallest mass)` and the mass residual decreases
/// by the factor `1 - t/2`.
pub fn solve_dual_density(
    support: &ConvexPolygon,
    density: DensityFn,
    sites: &[Point],
    options: &DualOptions,
    warm_start: Option<&[f64]>,
) -> Result<DualSolveResult> {
    check_sites(sites)?;
    let n = sites.len();
    let target = 1.0 / n as f64;
    let tol = options.tol.unwrap_or(1e-9 / n as f64);
    let refinement = options.refinement;

    let mut b = match warm_start {
        Some(w) if w.len() == n => w.to_vec(),
        _ => vec![0.0; n],
    };
    let mut eval = evaluate(support, density, sites, &b, refinement)?;
    if eval.masses.iter().any(|m| *m <= 0.0) {
        b = shrink_initialization(support, sites);
        eval = evaluate(support, density, sites, &b, refinement)?;
        if eval.masses.iter().any(|m| *m <= 0.0) {
            return Err(Error::DegenerateConfiguration(
                "density vanishes on the cell of some site; no admissible starting weights".into(),
            ));
        }
    }
    let floor = 0.5 * eval.masses.iter().cloned().fold(target, f64::min);

    let mut iterations = 0;
    loop {
        let grad: Vec<f64> = eval.masses.iter().map(|m| target - m).collect();
        let gnorm = sup_norm(&grad);
        if gnorm < tol || n == 1 {
            center(&mut b);
            let w2sq: f64 = eval.costs.iter().sum();
            let dual_value = b.iter().sum::<f64>() * target
                + eval.costs.iter().zip(&eval.masses).zip(&b).map(|((c, m), bi)| c - bi * m).sum::<f64>();
            let mut diagram = eval.diagram;
            diagram.weights = b.clone();
            return Ok(DualSolveResult {
                weights: b,
                masses: eval.masses,
                iterations,
                grad_norm: gnorm,
                w2sq,
                dual_value,
                diagram,
                hessian: eval.hessian,
            });
        }
        if iterations >= options.max_iter {
            return Err(Error::NonConvergence { iterations, grad_norm: gnorm });
        }
        iterations += 1;

        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = solve_reduced(&eval.hessian, &neg)?;
        let g2 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = b.iter().zip(&step).map(|(bi, s)| bi + t * s).collect();
            let e = evaluate(support, density, sites, &trial, refinement)?;
            let min_mass = e.masses.iter().cloned().fold(f64::INFINITY, f64::min);
            let r2 = e.masses.iter().map(|m| (target - m).powi(2)).sum::<f64>().sqrt();
            if min_mass >= floor && r2 <= (1.0 - 0.5 * t) * g2 {
                b = trial;
                eval = e;
                break;
            }
            // close to the solution the residual can stall at rounding level
            if min_mass >= floor && r2 <= g2 && sup_norm(&e.masses.iter().map(|m| target - m).collect::<Vec<_>>()) < tol {
                b = trial;
                eval = e;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::DegenerateConfiguration(format!(
                    "Newton damping stalled at iteration {iterations} (residual {gnorm:e})"
                )));
            }
        }
    }
}

/// [`solve_dual_density`] for a planar family at `θ`, on its own support.
pub fn solve_dual(
    family: &dyn PlanarFamily,
    theta: f64,
    sites: &[Point],
    options: &DualOptions,
    warm_start: Option<&[f64]>,
) -> Result<DualSolveResult> {
    let support = family.support(theta);
    solve_dual_density(&support, &|x| family.density2(theta, x), sites, options, warm_start)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(x: Point) -> f64 {
        if (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1]) {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn symmetric_sites_need_no_weights() {
        let sq = ConvexPolygon::unit_square();
        let sites = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]];
        let r = solve_dual_density(&sq, &uniform, &sites, &DualOptions::default(), None).unwrap();
        assert!(sup_norm(&r.weights) < 1e-12);
        assert!((r.w2sq - 1.0 / 24.0).abs() < 1e-14);
        assert!((r.dual_value - r.w2sq).abs() < 1e-14);
    }

    #[test]
    fn single_site() {
        let sq = ConvexPolygon::unit_square();
        let r = solve_dual_density(&sq, &uniform, &[[0.2, 0.9]], &DualOptions::default(), None).unwrap();
        assert_eq!(r.weights, vec![0.0]);
        // ∫ (x - 0.2)² + (y - 0.9)² over the unit square
        let exact = (1.0 / 3.0 - 0.2 + 0.04) + (1.0 / 3.0 - 0.9 + 0.81);
        assert!((r.w2sq - exact).abs() < 1e-14);
    }

    #[test]
    fn clustered_and_outside_sites_converge() {
        let sq = ConvexPolygon::unit_square();
        let sites = [[0.01, 0.01], [0.02, 0.011], [0.015, 0.03], [1.7, -0.4], [0.5, 0.5]];
        let r = solve_dual_density(&sq, &uniform, &sites, &DualOptions::default(), None).unwrap();
        for m in &r.masses {
            assert!((m - 0.2).abs() < 1e-9);
        }
        assert!(r.weights.iter().sum::<f64>().abs() < 1e-12);
        assert!((r.dual_value - r.w2sq).abs() < 1e-9);
    }
}
