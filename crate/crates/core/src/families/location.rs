use crate::quadrature::{gl8, graded_rule};
use super::{check_theta, Base1d, Family, Integrand, ParamDomain, Prob, TransportStructure};
use crate::error::Result;
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};

const TENSOR_LEVELS: u32 = 10;

/// `X = θ + ξ` with `ξ` having i.i.d. coordinates drawn from a base law.
#[derive(Clone, Debug)]
pub struct LocationFamily {
    id: String,
    base: Base1d,
    d: usize,
    domain: ParamDomain,
}

impl LocationFamily {
    pub fn new(base: Base1d, d: usize) -> Self {
        assert!(d >= 1);
        let id = if d == 1 {
            format!("location:{}", base.name())
        } else {
            format!("location:{}:{d}", base.name())
        };
        Self { id, base, d, domain: ParamDomain::unbounded(d) }
    }

    pub fn base(&self) -> Base1d {
        self.base
    }
}

impl Family for LocationFamily {
    fn id(&self) -> &str {
        &self.id
    }

    fn data_dim(&self) -> usize {
        self.d
    }

    fn param_dim(&self) -> usize {
        self.d
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn estimand(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(theta)
    }

    fn estimand_jacobian(&self, _theta: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.d, self.d)
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> f64 {
        x.iter().zip(theta).map(|(x, t)| self.base.pdf(x - t)).product()
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        let mut data = Vec::with_capacity(n * self.d);
        for _ in 0..n {
            for t in theta {
                data.push(t + self.base.draw(rng));
            }
        }
        Ok(Sample::new(n, self.d, data))
    }

    fn transport_linearization(&self, _theta: &[f64], _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.d, self.d))
    }

    fn info_closed_form(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.d, self.d))
    }

    fn cdf(&self, theta: &[f64], x: f64) -> Option<Prob> {
        (self.d == 1).then(|| self.base.cdf(x - theta[0]))
    }

    fn quantile(&self, theta: &[f64], u: Prob) -> Option<f64> {
        (self.d == 1).then(|| theta[0] + self.base.quantile(u))
    }

    fn quantile_grad(&self, _theta: &[f64], _u: Prob) -> Option<DVector<f64>> {
        (self.d == 1).then(|| DVector::from_element(1, 1.0))
    }

    fn quantile_hessian(&self, _theta: &[f64], _u: Prob) -> Option<DMatrix<f64>> {
        (self.d == 1).then(|| DMatrix::zeros(1, 1))
    }

    fn support_1d(&self, theta: &[f64]) -> Option<(f64, f64)> {
        let (lo, hi) = self.base.support();
        (self.d == 1).then(|| (lo + theta[0], hi + theta[0]))
    }

    fn transport_structure(&self) -> Option<&dyn TransportStructure> {
        Some(self)
    }

    fn integration_box(&self, theta: &[f64]) -> Option<Vec<(f64, f64)>> {
        let (lo, hi) = self.base.effective_support();
        Some(theta.iter().map(|t| (t + lo, t + hi)).collect())
    }

    // coordinates are independent, so a tensor rule in quantile space replaces box quadrature
    fn expectation_override(&self, theta: &[f64], dim: usize, f: Integrand) -> Option<Result<Vec<f64>>> {
        (self.d >= 3).then(|| Ok(tensor_expectation(&self.base, theta, dim, f)))
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        let n = sample.n() as f64;
        let mut m = vec![0.0; self.d];
        for row in sample.rows() {
            for (a, v) in m.iter_mut().zip(row) {
                *a += v / n;
            }
        }
        let shift = self.base.mean();
        Some(m.into_iter().map(|v| v - shift).collect())
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [0.0, 0.5, -1.3, 2.0, -0.7]
            .iter()
            .map(|&t| (0..self.d).map(|a| t + 0.25 * a as f64).collect())
            .collect()
    }
}

/// `E f(θ + ξ)` by the tensor product of one fixed graded rule per coordinate.
fn tensor_expectation(base: &Base1d, theta: &[f64], dim: usize, f: Integrand) -> Vec<f64> {
    let axis: Vec<(f64, f64)> = graded_rule(TENSOR_LEVELS, gl8())
        .into_iter()
        .map(|(u, ubar, w)| (base.quantile(Prob::from_parts(u, ubar)), w))
        .collect();
    let d = theta.len();
    let m = axis.len();
    let mut acc = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    let mut x = theta.to_vec();
    for flat in 0..m.pow(d as u32) {
        let mut rest = flat;
        let mut w = 1.0;
        for a in 0..d {
            let (q, wa) = axis[rest % m];
            rest /= m;
            x[a] = theta[a] + q;
            w *= wa;
        }
        f(&x, &mut buf);
        for (s, v) in acc.iter_mut().zip(&buf) {
            *s += w * v;
        }
    }
    acc
}

impl TransportStructure for LocationFamily {
    fn potential_dim(&self) -> usize {
        self.d
    }

    fn potential(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn potential_jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.d, self.d)
    }

    fn lambda(&self, _theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.d, self.d))
    }

    fn parameterization(&self, theta: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(theta))
    }

    fn parameterization_jacobian(&self, _theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.d, self.d))
    }
}
