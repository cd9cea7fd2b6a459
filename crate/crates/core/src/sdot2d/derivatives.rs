//! Derivatives of `W₂²(P_θ, P̄_n)` in the parameter and in the sites.

use super::geometry::{norm2, sub, EdgeLabel, Point};
use super::integrate::{cell_nodes, edge_nodes, CELL_REFINEMENT};
use super::planar::{dtheta_density, PlanarFamily};
use super::solver::{solve_reduced, DualSolveResult};
use crate::error::Result;

/// `∂_θ W₂²`. Fixed supports use `Σ_i ∫_{V_i} (‖x - x_i‖² - b_i) ∂_θ p`;
/// moving supports use the transport form [`dtheta_w2sq_transport`].
pub fn dtheta_w2sq(family: &dyn PlanarFamily, theta: f64, solve: &DualSolveResult) -> f64 {
    if family.moving_support() {
        return dtheta_w2sq_transport(family, theta, solve);
    }
    let pd = &solve.diagram;
    let mut acc = 0.0;
    for (i, cell) in pd.cells.iter().enumerate() {
        let (xi, bi) = (pd.sites[i], solve.weights[i]);
        for (x, w) in cell_nodes(&cell.vertices, CELL_REFINEMENT) {
            acc += w * (norm2(sub(x, xi)) - bi) * dtheta_density(family, theta, x);
        }
    }
    acc
}

/// `∂_θ W₂² = Σ_i ∫_{V_i} 2 (x - x_i)·Φ_θ(x) p_θ(x) dx`.
pub fn dtheta_w2sq_transport(family: &dyn PlanarFamily, theta: f64, solve: &DualSolveResult) -> f64 {
    let pd = &solve.diagram;
    let mut acc = 0.0;
    for (i, cell) in pd.cells.iter().enumerate() {
        let xi = pd.sites[i];
        for (x, w) in cell_nodes(&cell.vertices, CELL_REFINEMENT) {
            let phi = family.transport_field(theta, x);
            acc += w * 2.0 * ((x[0] - xi[0]) * phi[0] + (x[1] - xi[1]) * phi[1]) * family.density2(theta, x);
        }
    }
    acc
}

/// `∇_{x_i} W₂² = 2 (x_i m_i - ∫_{V_i} x p)`.
pub fn grad_xi_w2sq(family: &dyn PlanarFamily, theta: f64, solve: &DualSolveResult, i: usize) -> Point {
    let pd = &solve.diagram;
    let xi = pd.sites[i];
    let mut m = 0.0;
    let mut first = [0.0, 0.0];
    for (x, w) in cell_nodes(&pd.cells[i].vertices, CELL_REFINEMENT) {
        let pw = w * family.density2(theta, x);
        m += pw;
        first[0] += pw * x[0];
        first[1] += pw * x[1];
    }
    [2.0 * (xi[0] * m - first[0]), 2.0 * (xi[1] * m - first[1])]
}

/// `∂b/∂θ` by implicit differentiation of the mass constraints:
/// `H b' = ∂m/∂θ|_b` with `∂m_i/∂θ|_b = -Σ_j ∫_{Γ_ij} p Φ·(x_j - x_i)/‖x_j - x_i‖`.
/// Normalized so that `Σ b'_i = 0`.
pub fn dweights_dtheta(family: &dyn PlanarFamily, theta: f64, solve: &DualSolveResult) -> Result<Vec<f64>> {
    let pd = &solve.diagram;
    let n = pd.n();
    let mut rhs = vec![0.0; n];
    for (i, cell) in pd.cells.iter().enumerate() {
        let xi = pd.sites[i];
        for (a, c, label) in cell.edges() {
            if let EdgeLabel::Site(j) = label {
                let e = sub(pd.sites[j], xi);
                let d = norm2(e).sqrt();
                let flux: f64 = edge_nodes(a, c)
                    .map(|(x, w)| {
                        let phi = family.transport_field(theta, x);
                        w * family.density2(theta, x) * (phi[0] * e[0] + phi[1] * e[1]) / d
                    })
                    .sum();
                rhs[i] -= flux;
            }
        }
    }
    let mut db = solve_reduced(&solve.hessian, &rhs)?;
    let m = db.iter().sum::<f64>() / n as f64;
    for v in db.iter_mut() {
        *v -= m;
    }
    Ok(db)
}

/// `∇_{x_i} ∂_θ W₂²` for every site, sharing one solve for `∂b/∂θ`.
///
/// Volume term `-2 ∫_{V_i} Φ p` plus, over each interface `Γ_ij`,
/// `∫ (x - x_i) p [2Φ·(x_j - x_i) + b'_j - b'_i] / ‖x_j - x_i‖ dH¹`.
pub fn mixed_derivatives(family: &dyn PlanarFamily, theta: f64, solve: &DualSolveResult) -> Result<Vec<Point>> {
    let db = dweights_dtheta(family, theta, solve)?;
    Ok((0..solve.diagram.n()).map(|i| mixed_with(family, theta, solve, &db, i)).collect())
}

/// `∇_{x_i} ∂_θ W₂²` for one site.
pub fn mixed_derivative_xi_theta(family: &dyn PlanarFamily, theta: f64, solve: &DualSolveResult, i: usize) -> Result<Point> {
    let db = dweights_dtheta(family, theta, solve)?;
    Ok(mixed_with(family, theta, solve, &db, i))
}

fn mixed_with(family: &dyn PlanarFamily, theta: f64, solve: &DualSolveResult, db: &[f64], i: usize) -> Point {
    let pd = &solve.diagram;
    let xi = pd.sites[i];
    let mut out = [0.0, 0.0];
    for (x, w) in cell_nodes(&pd.cells[i].vertices, CELL_REFINEMENT) {
        let phi = family.transport_field(theta, x);
        let pw = w * family.density2(theta, x);
        out[0] -= 2.0 * pw * phi[0];
        out[1] -= 2.0 * pw * phi[1];
    }
    for (a, c, label) in pd.cells[i].edges() {
        if let EdgeLabel::Site(j) = label {
            let e = sub(pd.sites[j], xi);
            let d = norm2(e).sqrt();
            for (x, w) in edge_nodes(a, c) {
                let phi = family.transport_field(theta, x);
                let s = w * family.density2(theta, x) * (2.0 * (phi[0] * e[0] + phi[1] * e[1]) + db[j] - db[i]) / d;
                out[0] += s * (x[0] - xi[0]);
                out[1] += s * (x[1] - xi[1]);
            }
        }
    }
    out
}
