use super::{check_theta, Base1d, Family, ParamDomain};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};

/// Fixed-design linear model `X_i = W_i θ + ε_i` with i.i.d. standard
/// Gaussian noise. Observations are independent but not identically
/// distributed, so the information of a sample is `WᵀW` rather than `n J`.
#[derive(Clone, Debug)]
pub struct RegressionFamily {
    design: DMatrix<f64>,
    domain: ParamDomain,
}

impl RegressionFamily {
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        if design.nrows() < design.ncols() || design.ncols() == 0 {
            return Err(Error::Config(format!(
                "design must have at least as many rows as columns, got {}x{}",
                design.nrows(),
                design.ncols()
            )));
        }
        let gram = design.transpose() * &design;
        if gram.clone().cholesky().is_none() {
            return Err(Error::Config("design does not have full column rank".into()));
        }
        let p = design.ncols();
        Ok(Self { design, domain: ParamDomain::unbounded(p) })
    }

    /// Deterministic, well conditioned `50 x 3` design: an intercept, a linear
    /// trend and a periodic regressor.
    pub fn default_design() -> DMatrix<f64> {
        DMatrix::from_fn(50, 3, |i, j| {
            let t = i as f64 / 49.0;
            match j {
                0 => 1.0,
                1 => 2.0 * t - 1.0,
                _ => (2.0 * std::f64::consts::PI * 3.0 * t).sin() + 0.3 * t * t,
            }
        })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    fn means(&self, theta: &[f64]) -> DVector<f64> {
        &self.design * DVector::from_column_slice(theta)
    }
}

impl Family for RegressionFamily {
    fn id(&self) -> &str {
        "regression"
    }

    fn data_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        self.design.ncols()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn estimand(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(theta)
    }

    fn estimand_jacobian(&self, _theta: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.param_dim(), self.param_dim())
    }

    /// Law of a uniformly chosen observation.
    fn density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let m = self.means(theta);
        let g = Base1d::STANDARD_GAUSSIAN;
        m.iter().map(|mi| g.pdf(x[0] - mi)).sum::<f64>() / m.len() as f64
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        if n != self.design.nrows() {
            return Err(Error::Config(format!(
                "regression design has {} rows but n = {n} was requested",
                self.design.nrows()
            )));
        }
        let g = Base1d::STANDARD_GAUSSIAN;
        Ok(Sample::from_scalars(self.means(theta).iter().map(|m| m + g.draw(rng)).collect()))
    }

    fn transport_linearization(&self, _theta: &[f64], _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn total_information_override(&self, _theta: &[f64], n: usize) -> Option<Result<DMatrix<f64>>> {
        Some(if n == self.design.nrows() {
            Ok(self.design.transpose() * &self.design)
        } else {
            Err(Error::Config(format!("regression information needs n = {}", self.design.nrows())))
        })
    }

    fn fixed_sample_size(&self) -> Option<usize> {
        Some(self.design.nrows())
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        let p = self.param_dim();
        [0.0, 1.0, -0.5]
            .iter()
            .map(|&t| (0..p).map(|j| t + 0.1 * j as f64).collect())
            .collect()
    }
}
