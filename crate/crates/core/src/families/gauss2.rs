use super::{check_theta, Base1d, Family, ParamDomain, Prob, TransportStructure};
use crate::error::Result;
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};

/// `N(μ, σ²)` indexed by `θ = (μ, σ²)`, estimand `(μ, σ² + μ²)`.
///
/// The transport structure uses the potential `φ(x) = (x, x²/2)`, whose
/// parameterization is `(μ, (σ² + μ²)/2)`.
#[derive(Clone, Debug)]
pub struct Gaussian2 {
    domain: ParamDomain,
}

impl Default for Gaussian2 {
    fn default() -> Self {
        Self {
            domain: ParamDomain::new(vec![f64::NEG_INFINITY, 0.0], vec![f64::INFINITY, f64::INFINITY]),
        }
    }
}

impl Gaussian2 {
    pub fn new() -> Self {
        Self::default()
    }
}

fn z(u: Prob) -> f64 {
    Base1d::STANDARD_GAUSSIAN.quantile(u)
}

impl Family for Gaussian2 {
    fn id(&self) -> &str {
        "gauss2"
    }

    fn data_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn estimand(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![theta[0], theta[1] + theta[0] * theta[0]])
    }

    fn estimand_jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 2.0 * theta[0], 0.0, 1.0])
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> f64 {
        Base1d::Gaussian { sd: theta[1].sqrt() }.pdf(x[0] - theta[0])
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        let base = Base1d::Gaussian { sd: theta[1].sqrt() };
        Ok(Sample::from_scalars((0..n).map(|_| theta[0] + base.draw(rng)).collect()))
    }

    fn transport_linearization(&self, theta: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(1, 2, &[1.0, (x[0] - theta[0]) / (2.0 * theta[1])]))
    }

    fn info_closed_form(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25 / theta[1]])))
    }

    fn cdf(&self, theta: &[f64], x: f64) -> Option<Prob> {
        Some(Base1d::Gaussian { sd: theta[1].sqrt() }.cdf(x - theta[0]))
    }

    fn quantile(&self, theta: &[f64], u: Prob) -> Option<f64> {
        Some(theta[0] + theta[1].sqrt() * z(u))
    }

    fn quantile_grad(&self, theta: &[f64], u: Prob) -> Option<DVector<f64>> {
        Some(DVector::from_vec(vec![1.0, z(u) / (2.0 * theta[1].sqrt())]))
    }

    fn quantile_hessian(&self, theta: &[f64], u: Prob) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(2, 2);
        h[(1, 1)] = -0.25 * z(u) * theta[1].powf(-1.5);
        Some(h)
    }

    fn support_1d(&self, _theta: &[f64]) -> Option<(f64, f64)> {
        Some((f64::NEG_INFINITY, f64::INFINITY))
    }

    fn transport_structure(&self) -> Option<&dyn TransportStructure> {
        Some(self)
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        let xs = sample.as_slice();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        Some(vec![m, v.max(1e-12)])
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0], vec![0.5, 2.0], vec![-1.0, 0.5], vec![2.0, 1.5], vec![0.3, 3.0]]
    }
}

impl TransportStructure for Gaussian2 {
    fn potential_dim(&self) -> usize {
        2
    }

    fn potential(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![x[0], 0.5 * x[0] * x[0]])
    }

    fn potential_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &[1.0, x[0]])
    }

    fn lambda(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let (m, v) = (theta[0], theta[1]);
        Ok(DMatrix::from_row_slice(2, 2, &[1.0, m, m, v + m * m]))
    }

    fn parameterization(&self, theta: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(vec![theta[0], 0.5 * (theta[1] + theta[0] * theta[0])]))
    }

    fn parameterization_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(2, 2, &[1.0, theta[0], 0.0, 0.5]))
    }
}
