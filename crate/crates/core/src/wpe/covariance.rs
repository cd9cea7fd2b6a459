use crate::error::{Error, Result};
use crate::families::{quantile_gradient, wasserstein_information, Family, Prob};
use crate::quadrature::gl16;
use nalgebra::{DMatrix, DVector};

const MAX_PANELS: usize = 256;
const TOL: f64 = 1e-10;

/// Asymptotic covariance of the one dimensional projection estimator,
/// `J⁻¹ (∫∫ (min(u,v) − uv) g(u) g(v)ᵀ du dv) J⁻¹` with `g = ∇_θF⁻¹ / p(F⁻¹)`.
///
/// The kernel is the Brownian bridge covariance, so the double integral equals
/// `∫₀¹ (Γ(u) − Γ̄)(Γ(u) − Γ̄)ᵀ du` with `Γ(u) = ∫_u^1 g` and `Γ̄ = ∫₀¹ Γ`.
pub fn wpe_asymptotic_covariance(family: &dyn Family, theta: &[f64]) -> Result<DMatrix<f64>> {
    if family.data_dim() != 1 {
        return Err(Error::Unsupported(format!("asymptotic covariance for d = {}", family.data_dim())));
    }
    match family.support_1d(theta) {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() => {}
        _ => {
            return Err(Error::HypothesisViolation(format!(
                "`{}` does not have bounded support at θ = {theta:?}",
                family.id()
            )))
        }
    }
    let p = family.param_dim();
    let g = |u: f64| -> Result<DVector<f64>> {
        let prob = Prob::from_parts(u, 1.0 - u);
        let q = family
            .quantile(theta, prob)
            .ok_or_else(|| Error::Unsupported(format!("family `{}` has no quantile function", family.id())))?;
        let dens = family.density(theta, &[q]);
        if !(dens.is_finite() && dens > 1e-12) {
            return Err(Error::HypothesisViolation(format!("density {dens} at the {u}-quantile of `{}`", family.id())));
        }
        let (grad, _) = quantile_gradient(family, theta, prob)
            .ok_or_else(|| Error::Unsupported(format!("family `{}` has no quantile gradient", family.id())))?;
        Ok(grad / dens)
    };
    let mut prev: Option<DMatrix<f64>> = None;
    let mut panels = 8;
    loop {
        let bracket = bridge_integral(&g, p, panels)?;
        if let Some(pr) = &prev {
            let change = (&bracket - pr).norm();
            if change <= TOL * bracket.norm().max(1e-300) {
                let j = wasserstein_information(family, theta)?.matrix;
                let jinv = j
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::DegenerateInformation(format!("information {j} is singular")))?;
                let sigma = &jinv * bracket * &jinv;
                return Ok(0.5 * (&sigma + sigma.transpose()));
            }
            if panels >= MAX_PANELS {
                return Err(Error::QuadratureNonConvergence { panels, previous: pr.as_slice().to_vec(), last: bracket.as_slice().to_vec() });
            }
        }
        prev = Some(bracket);
        panels *= 2;
    }
}

fn bridge_integral(g: &dyn Fn(f64) -> Result<DVector<f64>>, p: usize, panels: usize) -> Result<DMatrix<f64>> {
    let rule = gl16();
    let h = 1.0 / panels as f64;
    // nodes, weights and g at every node, panel by panel
    let mut nodes = Vec::with_capacity(panels);
    for k in 0..panels {
        let a = k as f64 * h;
        let pts: Vec<(f64, f64)> = rule.mapped(a, a + h).collect();
        let vals = pts.iter().map(|&(u, _)| g(u)).collect::<Result<Vec<_>>>()?;
        nodes.push((pts, vals));
    }
    let panel_sums: Vec<DVector<f64>> = nodes
        .iter()
        .map(|(pts, vals)| pts.iter().zip(vals).fold(DVector::zeros(p), |acc, (&(_, w), v)| acc + w * v))
        .collect();
    let mut tails = vec![DVector::zeros(p); panels];
    for k in (0..panels.saturating_sub(1)).rev() {
        tails[k] = &tails[k + 1] + &panel_sums[k + 1];
    }
    let mut gammas = Vec::with_capacity(panels * rule.nodes().len());
    for (k, (pts, _)) in nodes.iter().enumerate() {
        let b = (k + 1) as f64 * h;
        for &(u, w) in pts {
            let mut partial = tails[k].clone();
            for (s, ws) in rule.mapped(u, b) {
                partial.axpy(ws, &g(s)?, 1.0);
            }
            gammas.push((w, partial));
        }
    }
    let mean = gammas.iter().fold(DVector::zeros(p), |acc, (w, v)| acc + *w * v);
    let mut out = DMatrix::zeros(p, p);
    for (w, v) in &gammas {
        let c = v - &mean;
        out += *w * &c * c.transpose();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{build_family, FamilyOptions};
    use approx::assert_relative_eq;

    #[test]
    fn uniform_scale_covariance_scales_with_theta_squared() {
        let f = build_family("uniform-scale", &FamilyOptions::default()).unwrap();
        for theta in [1.0, 2.0, 0.7] {
            let s = wpe_asymptotic_covariance(&*f, &[theta]).unwrap();
            assert_relative_eq!(s[(0, 0)], theta * theta / 5.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn bridge_bracket_matches_riemann_sum() {
        // ∫∫ (min(u,v) − uv) u v du dv by midpoint sums on a 1000 x 1000 grid
        let m = 1000;
        let mut brute = 0.0;
        for i in 0..m {
            let u = (i as f64 + 0.5) / m as f64;
            for j in 0..m {
                let v = (j as f64 + 0.5) / m as f64;
                brute += (u.min(v) - u * v) * u * v;
            }
        }
        brute /= (m * m) as f64;
        let g = |u: f64| Ok(DVector::from_element(1, u));
        let q = bridge_integral(&g, 1, 16).unwrap()[(0, 0)];
        assert_relative_eq!(q, 1.0 / 45.0, max_relative = 1e-12);
        assert_relative_eq!(brute, 1.0 / 45.0, max_relative = 1e-5);
    }

    #[test]
    fn unbounded_support_is_rejected() {
        let f = build_family("scale:gaussian", &FamilyOptions::default()).unwrap();
        assert!(matches!(wpe_asymptotic_covariance(&*f, &[1.0]), Err(Error::HypothesisViolation(_))));
    }
}
