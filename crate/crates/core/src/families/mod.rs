//! Parametric models with samplers, quantiles, transport linearizations and
//! Wasserstein information.

mod base;
mod catalog;
mod corr2d;
mod flow;
mod gauss2;
mod information;
mod location;
mod pareto;
mod regression;
mod reparam;
mod scale;

pub use base::Base1d;
pub use catalog::{build_family, register_builtin_families, FamilyCatalog, FamilyOptions, BUILTIN_FAMILY_IDS};
pub use corr2d::CorrelationFamily;
pub use flow::{FlowFamily, Potential};
pub use gauss2::Gaussian2;
pub use information::{
    expectation, quantile_gradient, quantile_hessian, shift_constant, total_information, transport_family_check,
    wasserstein_information, wasserstein_information_quadrature, InformationMethod, TransportCheck,
    WassersteinInformation,
};
pub use location::LocationFamily;
pub use pareto::ParetoFamily;
pub use regression::RegressionFamily;
pub use reparam::ReparameterizedFamily;
pub use scale::{ScaleEstimand, ScaleFamily};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sample::Sample;
use crate::sdot2d::PlanarFamily;
use nalgebra::{DMatrix, DVector};
use std::fmt;

/// A probability level carried together with its complement, so that both
/// tails can be evaluated without cancellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prob {
    lower: f64,
    upper: f64,
}

impl Prob {
    pub fn new(u: f64) -> Self {
        Self { lower: u, upper: 1.0 - u }
    }

    /// The level `1 - q`, given `q` exactly.
    pub fn from_upper(q: f64) -> Self {
        Self { lower: 1.0 - q, upper: q }
    }

    pub fn from_parts(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    /// `u`
    pub fn lower(self) -> f64 {
        self.lower
    }

    /// `1 - u`
    pub fn upper(self) -> f64 {
        self.upper
    }
}

/// Open box `Θ ⊆ R^p`; infinite bounds allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn unbounded(p: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; p], vec![f64::INFINITY; p])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| t.is_finite() && t > lo && t < hi)
    }
}

/// Factored form `Φ_θ(x) = Dφ(x) Λ(θ)⁻¹ Dχ(θ)ᵀ` of a transport family.
///
/// `parameterization` is the map whose Jacobian appears in the factorization;
/// it can differ from the family's reported estimand when the family is
/// indexed by a more natural parameter.
pub trait TransportStructure: Send + Sync {
    fn potential_dim(&self) -> usize;
    /// `φ(x) ∈ R^k`
    fn potential(&self, x: &[f64]) -> DVector<f64>;
    /// `Dφ(x)`, `d x k`
    fn potential_jacobian(&self, x: &[f64]) -> DMatrix<f64>;
    /// `Λ(θ) = E_θ[Dφᵀ Dφ]`, `k x k`
    fn lambda(&self, theta: &[f64]) -> Result<DMatrix<f64>>;
    fn parameterization(&self, theta: &[f64]) -> Result<DVector<f64>>;
    /// `p x k`
    fn parameterization_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>>;
}

/// Expectation hook signature: `f(x, out)` writes `dim` values.
pub type Integrand<'a> = &'a (dyn Fn(&[f64], &mut [f64]) + Sync);

/// A parametric model `{P_θ : θ ∈ Θ}` on `R^d`.
///
/// Matrix conventions: transport linearizations are `d x p`, estimand
/// Jacobians are `p x k` (row `j` holds `∂χ/∂θ_j`).
pub trait Family: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;
    fn data_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn estimand_dim(&self) -> usize {
        self.param_dim()
    }
    fn domain(&self) -> &ParamDomain;
    fn estimand(&self, theta: &[f64]) -> DVector<f64>;
    fn estimand_jacobian(&self, theta: &[f64]) -> DMatrix<f64>;
    fn density(&self, theta: &[f64], x: &[f64]) -> f64;
    /// Draws `n` points. Implementations call [`check_theta`] first.
    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample>;
    /// `Φ_θ(x)`, `d x p`. `None` when it is not a function of `x` alone.
    fn transport_linearization(&self, theta: &[f64], x: &[f64]) -> Option<DMatrix<f64>>;

    fn info_closed_form(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn cdf(&self, _theta: &[f64], _x: f64) -> Option<Prob> {
        None
    }
    fn quantile(&self, _theta: &[f64], _u: Prob) -> Option<f64> {
        None
    }
    /// `∇_θ F_θ⁻¹(u)`
    fn quantile_grad(&self, _theta: &[f64], _u: Prob) -> Option<DVector<f64>> {
        None
    }
    /// `∇²_θ F_θ⁻¹(u)`
    fn quantile_hessian(&self, _theta: &[f64], _u: Prob) -> Option<DMatrix<f64>> {
        None
    }
    /// Closure of the support for `d = 1`.
    fn support_1d(&self, _theta: &[f64]) -> Option<(f64, f64)> {
        None
    }
    fn transport_structure(&self) -> Option<&dyn TransportStructure> {
        None
    }
    /// Override for the total information of a sample of size `n` (non-i.i.d. models).
    fn total_information_override(&self, _theta: &[f64], _n: usize) -> Option<Result<DMatrix<f64>>> {
        None
    }
    /// Bounding box carrying all but a negligible part of the mass (`d = 2` quadrature).
    fn integration_box(&self, _theta: &[f64]) -> Option<Vec<(f64, f64)>> {
        None
    }
    /// Family specific route for `E_θ[f(X)]`.
    fn expectation_override(&self, _theta: &[f64], _dim: usize, _f: Integrand) -> Option<Result<Vec<f64>>> {
        None
    }
    /// Cheap consistent estimate used to center search windows.
    fn pilot_estimate(&self, _sample: &Sample) -> Option<Vec<f64>> {
        None
    }
    /// Fixed sample size of non-i.i.d. designs.
    fn fixed_sample_size(&self) -> Option<usize> {
        None
    }
    /// Representative interior parameters used by self checks.
    fn reference_thetas(&self) -> Vec<Vec<f64>>;
    fn planar(&self) -> Option<&dyn PlanarFamily> {
        None
    }
}

/// Errors with [`Error::OutOfDomain`] unless `theta ∈ Θ`.
pub fn check_theta(family: &dyn Family, theta: &[f64]) -> Result<()> {
    if family.domain().contains(theta) {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            family: family.id().to_string(),
            theta: theta.to_vec(),
        })
    }
}
