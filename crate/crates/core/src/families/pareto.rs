use super::{check_theta, Family, ParamDomain, Prob, TransportStructure};
use crate::error::Result;
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Keeps every moment needed by the information and variance integrals finite.
pub const PARETO_MARGIN: f64 = 1e-3;

/// Density `θ x^{-(θ+1)}` on `[1, ∞)`, `θ > 2`; estimand `(θ - 2)⁻²`.
#[derive(Clone, Debug)]
pub struct ParetoFamily {
    domain: ParamDomain,
}

impl Default for ParetoFamily {
    fn default() -> Self {
        Self {
            domain: ParamDomain::new(vec![2.0 + PARETO_MARGIN], vec![f64::INFINITY]),
        }
    }
}

impl ParetoFamily {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Family for ParetoFamily {
    fn id(&self) -> &str {
        "pareto"
    }

    fn data_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn estimand(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, (theta[0] - 2.0).powi(-2))
    }

    fn estimand_jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -2.0 * (theta[0] - 2.0).powi(-3))
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let t = theta[0];
        if x[0] < 1.0 {
            0.0
        } else {
            t * x[0].powf(-(t + 1.0))
        }
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        let t = theta[0];
        Ok(Sample::from_scalars(
            (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / t)).collect(),
        ))
    }

    fn transport_linearization(&self, theta: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, -x[0] * x[0].ln() / theta[0]))
    }

    fn info_closed_form(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let t = theta[0];
        Some(DMatrix::from_element(1, 1, 2.0 / (t * (t - 2.0).powi(3))))
    }

    fn cdf(&self, theta: &[f64], x: f64) -> Option<Prob> {
        Some(if x <= 1.0 {
            Prob::new(0.0)
        } else {
            Prob::from_upper(x.powf(-theta[0]))
        })
    }

    fn quantile(&self, theta: &[f64], u: Prob) -> Option<f64> {
        Some(u.upper().powf(-1.0 / theta[0]))
    }

    fn quantile_grad(&self, theta: &[f64], u: Prob) -> Option<DVector<f64>> {
        let t = theta[0];
        let l = u.upper().ln();
        Some(DVector::from_element(1, (-l / t).exp() * l / (t * t)))
    }

    fn quantile_hessian(&self, theta: &[f64], u: Prob) -> Option<DMatrix<f64>> {
        let t = theta[0];
        let l = u.upper().ln();
        let g = (-l / t).exp();
        Some(DMatrix::from_element(1, 1, g * (l * l / t.powi(4) - 2.0 * l / t.powi(3))))
    }

    fn support_1d(&self, _theta: &[f64]) -> Option<(f64, f64)> {
        Some((1.0, f64::INFINITY))
    }

    fn transport_structure(&self) -> Option<&dyn TransportStructure> {
        Some(self)
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        let m = sample.as_slice().iter().sum::<f64>() / sample.n() as f64;
        let t = if m > 1.0 { m / (m - 1.0) } else { 3.0 };
        Some(vec![t.max(2.0 + 2.0 * PARETO_MARGIN)])
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [3.0, 4.0, 5.0, 6.0, 8.0].iter().map(|&t| vec![t]).collect()
    }
}

impl TransportStructure for ParetoFamily {
    fn potential_dim(&self) -> usize {
        1
    }

    fn potential(&self, x: &[f64]) -> DVector<f64> {
        let x = x[0];
        DVector::from_element(1, 0.5 * x * x * x.ln() - 0.25 * x * x)
    }

    fn potential_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x[0] * x[0].ln())
    }

    fn lambda(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let t = theta[0];
        Ok(DMatrix::from_element(1, 1, 2.0 * t * (t - 2.0).powi(-3)))
    }

    fn parameterization(&self, theta: &[f64]) -> Result<DVector<f64>> {
        Ok(self.estimand(theta))
    }

    fn parameterization_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.estimand_jacobian(theta))
    }
}
