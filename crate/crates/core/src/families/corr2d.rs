use super::{check_theta, Family, ParamDomain};
use crate::error::Result;
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Centered bivariate Gaussian with unit variances and correlation `θ ∈ (-1, 1)`.
/// Not a transport family; its information is computed by quadrature.
#[derive(Clone, Debug)]
pub struct CorrelationFamily {
    domain: ParamDomain,
}

impl Default for CorrelationFamily {
    fn default() -> Self {
        Self {
            domain: ParamDomain::new(vec![-1.0], vec![1.0]),
        }
    }
}

impl CorrelationFamily {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Family for CorrelationFamily {
    fn id(&self) -> &str {
        "corr2d"
    }

    fn data_dim(&self) -> usize {
        2
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn estimand(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, theta[0])
    }

    fn estimand_jacobian(&self, _theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0)
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let r = theta[0];
        let det = 1.0 - r * r;
        let q = (x[0] * x[0] - 2.0 * r * x[0] * x[1] + x[1] * x[1]) / det;
        (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        let r = theta[0];
        let s = (1.0 - r * r).sqrt();
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            data.push(z1);
            data.push(r * z1 + s * z2);
        }
        Ok(Sample::new(n, 2, data))
    }

    fn transport_linearization(&self, theta: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        let r = theta[0];
        let c = 0.5 / (1.0 - r * r);
        Some(DMatrix::from_column_slice(2, 1, &[c * (-r * x[0] + x[1]), c * (x[0] - r * x[1])]))
    }

    fn integration_box(&self, _theta: &[f64]) -> Option<Vec<(f64, f64)>> {
        Some(vec![(-12.0, 12.0), (-12.0, 12.0)])
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        let m = sample.rows().map(|r| r[0] * r[1]).sum::<f64>() / sample.n() as f64;
        Some(vec![m.clamp(-0.99, 0.99)])
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [-0.6, -0.3, 0.0, 0.3, 0.6].iter().map(|&t| vec![t]).collect()
    }
}
