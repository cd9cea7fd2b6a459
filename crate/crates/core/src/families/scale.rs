use super::{check_theta, Base1d, Family, ParamDomain, Prob, TransportStructure};
use crate::error::Result;
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};

/// What a scale family reports as its estimand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleEstimand {
    /// `χ(θ) = θ²/2`
    HalfSquare,
    /// `χ(θ) = θ`
    Identity,
}

/// `X = θ ξ`, `θ > 0`, for a fixed base law of `ξ`.
#[derive(Clone, Debug)]
pub struct ScaleFamily {
    id: String,
    base: Base1d,
    estimand: ScaleEstimand,
    domain: ParamDomain,
}

impl ScaleFamily {
    /// Rescales `base` to unit second moment; estimand `θ²/2`.
    pub fn normalized(base: Base1d) -> Self {
        let base = base.scaled(1.0 / base.second_moment().sqrt());
        Self {
            id: format!("scale:{}", base.name()),
            base,
            estimand: ScaleEstimand::HalfSquare,
            domain: ParamDomain::new(vec![0.0], vec![f64::INFINITY]),
        }
    }

    /// `Unif[0, θ]` with estimand `θ`.
    pub fn uniform_zero_theta() -> Self {
        Self {
            id: "uniform-scale".to_string(),
            base: Base1d::Uniform { lo: 0.0, hi: 1.0 },
            estimand: ScaleEstimand::Identity,
            domain: ParamDomain::new(vec![0.0], vec![f64::INFINITY]),
        }
    }

    pub fn base(&self) -> Base1d {
        self.base
    }

    /// `E ξ²`
    fn m2(&self) -> f64 {
        self.base.second_moment()
    }
}

impl Family for ScaleFamily {
    fn id(&self) -> &str {
        &self.id
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
        let t = theta[0];
        DVector::from_element(
            1,
            match self.estimand {
                ScaleEstimand::HalfSquare => 0.5 * t * t,
                ScaleEstimand::Identity => t,
            },
        )
    }

    fn estimand_jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(
            1,
            1,
            match self.estimand {
                ScaleEstimand::HalfSquare => theta[0],
                ScaleEstimand::Identity => 1.0,
            },
        )
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.base.pdf(x[0] / theta[0]) / theta[0]
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        Ok(Sample::from_scalars((0..n).map(|_| theta[0] * self.base.draw(rng)).collect()))
    }

    fn transport_linearization(&self, theta: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, x[0] / theta[0]))
    }

    fn info_closed_form(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, self.m2()))
    }

    fn cdf(&self, theta: &[f64], x: f64) -> Option<Prob> {
        Some(self.base.cdf(x / theta[0]))
    }

    fn quantile(&self, theta: &[f64], u: Prob) -> Option<f64> {
        Some(theta[0] * self.base.quantile(u))
    }

    fn quantile_grad(&self, _theta: &[f64], u: Prob) -> Option<DVector<f64>> {
        Some(DVector::from_element(1, self.base.quantile(u)))
    }

    fn quantile_hessian(&self, _theta: &[f64], _u: Prob) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(1, 1))
    }

    fn support_1d(&self, theta: &[f64]) -> Option<(f64, f64)> {
        let (lo, hi) = self.base.support();
        Some((theta[0] * lo, theta[0] * hi))
    }

    fn transport_structure(&self) -> Option<&dyn TransportStructure> {
        Some(self)
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        let m2 = sample.as_slice().iter().map(|x| x * x).sum::<f64>() / sample.n() as f64;
        Some(vec![(m2 / self.m2()).sqrt()])
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [0.5, 1.0, 1.5, 2.0, 3.0].iter().map(|&t| vec![t]).collect()
    }
}

impl TransportStructure for ScaleFamily {
    fn potential_dim(&self) -> usize {
        1
    }

    fn potential(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, 0.5 * x[0] * x[0])
    }

    fn potential_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x[0])
    }

    fn lambda(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, theta[0] * theta[0] * self.m2()))
    }

    fn parameterization(&self, theta: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, 0.5 * theta[0] * theta[0] * self.m2()))
    }

    fn parameterization_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, theta[0] * self.m2()))
    }
}
