use super::{check_theta, Family, Integrand, ParamDomain, Prob, TransportStructure};
use crate::error::Result;
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// The subfamily `ξ ↦ P_{h(ξ)}` of an existing family. `jacobian(ξ)` is the
/// `q x p` matrix with rows `∂h/∂ξ_m`.
#[derive(Clone)]
pub struct ReparameterizedFamily {
    id: String,
    inner: Arc<dyn Family>,
    map: MapFn,
    jacobian: JacobianFn,
    domain: ParamDomain,
}

impl fmt::Debug for ReparameterizedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReparameterizedFamily").field("id", &self.id).field("inner", &self.inner.id()).finish()
    }
}

impl ReparameterizedFamily {
    pub fn new(
        name: &str,
        inner: Arc<dyn Family>,
        domain: ParamDomain,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: format!("{}@{name}", inner.id()),
            inner,
            map: Arc::new(map),
            jacobian: Arc::new(jacobian),
            domain,
        }
    }

    fn h(&self, xi: &[f64]) -> Vec<f64> {
        (self.map)(xi)
    }

    fn dh(&self, xi: &[f64]) -> DMatrix<f64> {
        (self.jacobian)(xi)
    }
}

impl Family for ReparameterizedFamily {
    fn id(&self) -> &str {
        &self.id
    }

    fn data_dim(&self) -> usize {
        self.inner.data_dim()
    }

    fn param_dim(&self) -> usize {
        self.domain.dim()
    }

    fn estimand_dim(&self) -> usize {
        self.inner.estimand_dim()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn estimand(&self, xi: &[f64]) -> DVector<f64> {
        self.inner.estimand(&self.h(xi))
    }

    fn estimand_jacobian(&self, xi: &[f64]) -> DMatrix<f64> {
        self.dh(xi) * self.inner.estimand_jacobian(&self.h(xi))
    }

    fn density(&self, xi: &[f64], x: &[f64]) -> f64 {
        self.inner.density(&self.h(xi), x)
    }

    fn sample(&self, xi: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, xi)?;
        self.inner.sample(&self.h(xi), n, rng)
    }

    fn transport_linearization(&self, xi: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.inner.transport_linearization(&self.h(xi), x)? * self.dh(xi).transpose())
    }

    fn info_closed_form(&self, xi: &[f64]) -> Option<DMatrix<f64>> {
        let dh = self.dh(xi);
        Some(&dh * self.inner.info_closed_form(&self.h(xi))? * dh.transpose())
    }

    fn cdf(&self, xi: &[f64], x: f64) -> Option<Prob> {
        self.inner.cdf(&self.h(xi), x)
    }

    fn quantile(&self, xi: &[f64], u: Prob) -> Option<f64> {
        self.inner.quantile(&self.h(xi), u)
    }

    fn quantile_grad(&self, xi: &[f64], u: Prob) -> Option<DVector<f64>> {
        Some(self.dh(xi) * self.inner.quantile_grad(&self.h(xi), u)?)
    }

    fn support_1d(&self, xi: &[f64]) -> Option<(f64, f64)> {
        self.inner.support_1d(&self.h(xi))
    }

    fn transport_structure(&self) -> Option<&dyn TransportStructure> {
        self.inner.transport_structure().map(|_| self as &dyn TransportStructure)
    }

    fn integration_box(&self, xi: &[f64]) -> Option<Vec<(f64, f64)>> {
        self.inner.integration_box(&self.h(xi))
    }

    fn expectation_override(&self, xi: &[f64], dim: usize, f: Integrand) -> Option<Result<Vec<f64>>> {
        Some(super::expectation(self.inner.as_ref(), &self.h(xi), dim, f))
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for k in 1..=5 {
            let t: Vec<f64> = self
                .domain
                .lower
                .iter()
                .zip(&self.domain.upper)
                .map(|(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => lo + (hi - lo) * k as f64 / 6.0,
                    (true, false) => lo + 0.4 * k as f64,
                    (false, true) => hi - 0.4 * k as f64,
                    (false, false) => 0.4 * k as f64 - 1.2,
                })
                .collect();
            out.push(t);
        }
        out
    }
}

impl TransportStructure for ReparameterizedFamily {
    fn potential_dim(&self) -> usize {
        self.structure().potential_dim()
    }

    fn potential(&self, x: &[f64]) -> DVector<f64> {
        self.structure().potential(x)
    }

    fn potential_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.structure().potential_jacobian(x)
    }

    fn lambda(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.structure().lambda(&self.h(xi))
    }

    fn parameterization(&self, xi: &[f64]) -> Result<DVector<f64>> {
        self.structure().parameterization(&self.h(xi))
    }

    fn parameterization_jacobian(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.dh(xi) * self.structure().parameterization_jacobian(&self.h(xi))?)
    }
}

impl ReparameterizedFamily {
    fn structure(&self) -> &dyn TransportStructure {
        self.inner
            .transport_structure()
            .expect("structure requested only when the inner family has one")
    }
}
