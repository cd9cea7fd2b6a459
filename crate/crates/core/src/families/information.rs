use super::{check_theta, Family, Integrand, Prob};
use crate::error::{Error, Result};
use crate::quadrature::{gl16, integrate_unit_graded};
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector};

const EXPECTATION_TOL: f64 = 1e-10;
const INFORMATION_TOL: f64 = 1e-8;
const QUANTILE_GRAD_STEP: f64 = 1e-5;
const QUANTILE_HESSIAN_STEP: f64 = 1e-4;

/// `∫₀¹ f(q(u)) du` on the graded mesh.
pub(crate) fn expect_quantile(q: &(dyn Fn(Prob) -> f64 + Sync), dim: usize, f: Integrand) -> Result<Vec<f64>> {
    let mut x = [0.0];
    integrate_unit_graded(dim, EXPECTATION_TOL, |u, ubar, out| {
        x[0] = q(Prob::from_parts(u, ubar));
        f(&x, out);
    })
}

/// `∫ f(x) p(x) dx` over a planar box with a tensor Gauss–Legendre rule,
/// doubling the panel count per axis until the relative change is below tolerance.
pub(crate) fn expect_box(
    bbox: &[(f64, f64)],
    density: &(dyn Fn(&[f64]) -> f64 + Sync),
    dim: usize,
    f: Integrand,
) -> Result<Vec<f64>> {
    if bbox.len() != 2 {
        return Err(Error::Unsupported(format!("box quadrature in dimension {}", bbox.len())));
    }
    let pass = |m: usize| -> Vec<f64> {
        let rule = gl16();
        let mut acc = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        let hx = (bbox[0].1 - bbox[0].0) / m as f64;
        let hy = (bbox[1].1 - bbox[1].0) / m as f64;
        for i in 0..m {
            let ax = bbox[0].0 + i as f64 * hx;
            for (x, wx) in rule.mapped(ax, ax + hx) {
                for j in 0..m {
                    let ay = bbox[1].0 + j as f64 * hy;
                    for (y, wy) in rule.mapped(ay, ay + hy) {
                        let pt = [x, y];
                        let w = wx * wy * density(&pt);
                        if w == 0.0 {
                            continue;
                        }
                        f(&pt, &mut buf);
                        for (a, b) in acc.iter_mut().zip(&buf) {
                            *a += w * b;
                        }
                    }
                }
            }
        }
        acc
    };
    let mut m = 8;
    let mut prev = pass(m);
    while m < 128 {
        m *= 2;
        let cur = pass(m);
        let diff = cur.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = cur.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        if cur.iter().all(|v| v.is_finite()) && diff < EXPECTATION_TOL * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    let last = pass(2 * m);
    Err(Error::QuadratureNonConvergence { panels: 4 * m * m, previous: prev, last })
}

/// `E_θ[f(X)]` by the most accurate route the family supports.
pub fn expectation(family: &dyn Family, theta: &[f64], dim: usize, f: Integrand) -> Result<Vec<f64>> {
    check_theta(family, theta)?;
    if let Some(r) = family.expectation_override(theta, dim, f) {
        return r;
    }
    if family.data_dim() == 1 && family.quantile(theta, Prob::new(0.5)).is_some() {
        return expect_quantile(&|u| family.quantile(theta, u).unwrap_or(f64::NAN), dim, f);
    }
    if let Some(bbox) = family.integration_box(theta) {
        return expect_box(&bbox, &|x| family.density(theta, x), dim, f);
    }
    Err(Error::Unsupported(format!("expectations under family `{}`", family.id())))
}

/// `∇_θ F_θ⁻¹(u)`, analytic when registered, otherwise by central differences.
/// The flag reports whether the fallback was used.
pub fn quantile_gradient(family: &dyn Family, theta: &[f64], u: Prob) -> Option<(DVector<f64>, bool)> {
    if let Some(g) = family.quantile_grad(theta, u) {
        return Some((g, false));
    }
    let p = theta.len();
    let mut g = DVector::zeros(p);
    let mut t = theta.to_vec();
    for j in 0..p {
        let h = QUANTILE_GRAD_STEP * (1.0 + theta[j].abs());
        t[j] = theta[j] + h;
        let up = family.quantile(&t, u)?;
        t[j] = theta[j] - h;
        let down = family.quantile(&t, u)?;
        t[j] = theta[j];
        g[j] = (up - down) / (2.0 * h);
    }
    Some((g, true))
}

/// `∇²_θ F_θ⁻¹(u)`, analytic when registered, otherwise by central differences
/// of the gradient.
pub fn quantile_hessian(family: &dyn Family, theta: &[f64], u: Prob) -> Option<DMatrix<f64>> {
    if let Some(h) = family.quantile_hessian(theta, u) {
        return Some(h);
    }
    let p = theta.len();
    let mut hess = DMatrix::zeros(p, p);
    let mut t = theta.to_vec();
    for j in 0..p {
        let h = QUANTILE_HESSIAN_STEP * (1.0 + theta[j].abs());
        t[j] = theta[j] + h;
        let up = quantile_gradient(family, &t, u)?.0;
        t[j] = theta[j] - h;
        let down = quantile_gradient(family, &t, u)?.0;
        t[j] = theta[j];
        hess.set_column(j, &((up - down) / (2.0 * h)));
    }
    Some(0.5 * (&hess + hess.transpose()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InformationMethod {
    ClosedForm,
    QuantileQuadrature,
    DensityQuadrature,
}

#[derive(Clone, Debug)]
pub struct WassersteinInformation {
    pub matrix: DMatrix<f64>,
    pub method: InformationMethod,
    /// The quantile gradient came from finite differences.
    pub finite_difference: bool,
}

/// `J(θ)`: the closed form when registered, otherwise quadrature.
pub fn wasserstein_information(family: &dyn Family, theta: &[f64]) -> Result<WassersteinInformation> {
    check_theta(family, theta)?;
    if let Some(matrix) = family.info_closed_form(theta) {
        return Ok(WassersteinInformation {
            matrix,
            method: InformationMethod::ClosedForm,
            finite_difference: false,
        });
    }
    wasserstein_information_quadrature(family, theta)
}

/// `J(θ)` by quadrature, ignoring any closed form. For `d = 1` this is
/// `∫₀¹ ∇_θF⁻¹ (∇_θF⁻¹)ᵀ du`; otherwise `E_θ[Φᵀ Φ]`.
pub fn wasserstein_information_quadrature(family: &dyn Family, theta: &[f64]) -> Result<WassersteinInformation> {
    check_theta(family, theta)?;
    let p = family.param_dim();
    if family.data_dim() == 1 && family.quantile(theta, Prob::new(0.5)).is_some() {
        let mut fd = false;
        let v = integrate_unit_graded(p * p, INFORMATION_TOL, |u, ubar, out| match quantile_gradient(family, theta, Prob::from_parts(u, ubar)) {
            Some((g, used_fd)) => {
                fd |= used_fd;
                for a in 0..p {
                    for b in 0..p {
                        out[a * p + b] = g[a] * g[b];
                    }
                }
            }
            None => out.fill(f64::NAN),
        })?;
        let m = DMatrix::from_row_slice(p, p, &v);
        return Ok(WassersteinInformation {
            matrix: 0.5 * (&m + m.transpose()),
            method: InformationMethod::QuantileQuadrature,
            finite_difference: fd,
        });
    }
    let probe = family.reference_thetas().into_iter().next().unwrap_or_else(|| theta.to_vec());
    let x0 = vec![0.0; family.data_dim()];
    if family.transport_linearization(&probe, &x0).is_none() {
        return Err(Error::Unsupported(format!(
            "family `{}` has no pointwise transport linearization",
            family.id()
        )));
    }
    let v = expectation(family, theta, p * p, &|x, out| match family.transport_linearization(theta, x) {
        Some(phi) => {
            let g = phi.transpose() * phi;
            for a in 0..p {
                for b in 0..p {
                    out[a * p + b] = g[(a, b)];
                }
            }
        }
        None => out.fill(f64::NAN),
    })?;
    let m = DMatrix::from_row_slice(p, p, &v);
    Ok(WassersteinInformation {
        matrix: 0.5 * (&m + m.transpose()),
        method: InformationMethod::DensityQuadrature,
        finite_difference: false,
    })
}

/// Information carried by a whole sample of size `n`.
pub fn total_information(family: &dyn Family, theta: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if let Some(r) = family.total_information_override(theta, n) {
        return r;
    }
    Ok(wasserstein_information(family, theta)?.matrix * n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportCheck {
    pub is_transport_family: bool,
    /// Largest factorization residual, or largest angle (radians) in the colinearity test.
    pub max_residual: f64,
}

const CHECK_THETAS: usize = 8;
const CHECK_POINTS: usize = 4;
const CHECK_SEED: u64 = 0x7a11_c0de;

/// Verifies the factored form of the transport linearization on a 32 point
/// `(θ, x)` grid, or runs a colinearity test when no structure is registered.
pub fn transport_family_check(family: &dyn Family) -> TransportCheck {
    let thetas = family.reference_thetas();
    if thetas.is_empty() {
        return TransportCheck { is_transport_family: false, max_residual: f64::INFINITY };
    }
    let grid: Vec<Vec<f64>> = (0..CHECK_THETAS).map(|j| thetas[j % thetas.len()].clone()).collect();
    let fail = TransportCheck { is_transport_family: false, max_residual: f64::INFINITY };

    if let Some(s) = family.transport_structure() {
        let mut worst: f64 = 0.0;
        for (j, theta) in grid.iter().enumerate() {
            let Ok(lambda) = s.lambda(theta) else { return fail };
            let Ok(dchi) = s.parameterization_jacobian(theta) else { return fail };
            let Some(lambda_inv) = lambda.clone().try_inverse() else { return fail };
            let Ok(xs) = family.sample(theta, CHECK_POINTS, &mut RngStream::new(CHECK_SEED, j as u64)) else {
                return fail;
            };
            for x in xs.rows() {
                let Some(phi) = family.transport_linearization(theta, x) else { return fail };
                let factored = s.potential_jacobian(x) * &lambda_inv * dchi.transpose();
                worst = worst.max((phi - factored).norm());
            }
        }
        return TransportCheck { is_transport_family: worst < 1e-8, max_residual: worst };
    }

    if family.param_dim() != 1 || family.estimand_dim() != 1 {
        return fail;
    }
    let mut worst: f64 = 0.0;
    for (j, theta) in grid.iter().enumerate() {
        let other = &grid[(j + 1) % grid.len()];
        let Ok(xs) = family.sample(theta, CHECK_POINTS, &mut RngStream::new(CHECK_SEED, j as u64)) else {
            return fail;
        };
        for x in xs.rows() {
            let (Some(a), Some(b)) = (family.transport_linearization(theta, x), family.transport_linearization(other, x))
            else {
                return fail;
            };
            let (na, nb) = (a.norm(), b.norm());
            if na == 0.0 || nb == 0.0 {
                continue;
            }
            let dot = a.dot(&b);
            let cross = (na * na * nb * nb - dot * dot).max(0.0).sqrt();
            worst = worst.max(cross.atan2(dot.abs()));
        }
    }
    TransportCheck { is_transport_family: worst <= 1e-6, max_residual: worst }
}

/// The constant `v` with `E_θ[φ(X)] = χ(θ) + v` for the structure's
/// parameterization, computed at `theta0` and checked at two further
/// reference parameters.
pub fn shift_constant(family: &dyn Family, theta0: &[f64]) -> Result<DVector<f64>> {
    let s = family
        .transport_structure()
        .ok_or_else(|| Error::Unsupported(format!("family `{}` is not a transport family", family.id())))?;
    let k = s.potential_dim();
    let at = |theta: &[f64]| -> Result<DVector<f64>> {
        let m = expectation(family, theta, k, &|x, out| out.copy_from_slice(s.potential(x).as_slice()))?;
        Ok(DVector::from_vec(m) - s.parameterization(theta)?)
    };
    let v = at(theta0)?;
    for theta in family.reference_thetas().iter().filter(|t| t.as_slice() != theta0).take(2) {
        let w = at(theta)?;
        let dev = (&w - &v).amax();
        if dev > 1e-6 * v.amax().max(1.0) {
            return Err(Error::Numeric(format!(
                "shift constant of `{}` varies with θ: {v:?} at {theta0:?}, {w:?} at {theta:?}",
                family.id()
            )));
        }
    }
    Ok(v)
}
