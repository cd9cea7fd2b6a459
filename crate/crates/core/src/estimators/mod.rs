//! Statistics `T_n` with values and per-point Jacobians `D_{x_i} T_n`.

mod builtin;
mod catalog;
mod fd;

pub use builtin::{
    BleUniformScale, Composed, GaussMoments, LStatistic, Ols, PhiMean, ProductMean, SampleMax, SampleMean, SampleMedian,
    SampleVariance, SecondMomentMean,
};
pub use catalog::{
    build_estimator, register_builtin_estimators, EstimatorCatalog, EstimatorOptions, Wpe1d, Wpe2d, BUILTIN_ESTIMATOR_IDS,
};
pub use fd::{finite_difference_jacobians, FD_STEP_SCALE};

use crate::error::Result;
use crate::families::{expectation, Family};
use crate::sample::{Jacobians, Sample};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientKind {
    Analytic,
    FiniteDifference,
}

/// `x ↦ (f(x), Df(x))` with `Df` of shape `d x k`.
pub type MomentMap = Arc<dyn Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>) + Send + Sync>;
/// `θ ↦ Dχ(θ)`, `p x k`.
pub type TargetJacobian = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// What an estimator is unbiased for under a given family.
#[derive(Clone)]
pub enum Target {
    /// The family's registered estimand.
    Estimand,
    /// `E_θ[f(X)]`.
    Moment(MomentMap),
    /// A parameter function with known Jacobian.
    Function(TargetJacobian),
    /// Biased, or no target known.
    None,
}

impl Target {
    pub fn is_none(&self) -> bool {
        matches!(self, Target::None)
    }
}

/// `Dχ(θ)` of an estimator's target, `p x k`, when it has one. For moments
/// this is `E_θ[Φ_θ(X)ᵀ Df(X)]`, the derivative of `θ ↦ E_θ f(X)`.
pub fn target_jacobian(target: &Target, family: &dyn Family, theta: &[f64]) -> Result<Option<DMatrix<f64>>> {
    match target {
        Target::Estimand => Ok(Some(family.estimand_jacobian(theta))),
        Target::Function(j) => Ok(Some(j(theta))),
        Target::None => Ok(None),
        Target::Moment(f) => {
            let d = family.data_dim();
            let p = family.param_dim();
            let k = f(&vec![0.0; d]).0.len();
            let v = expectation(family, theta, p * k, &|x, out| {
                let (_, df) = f(x);
                match family.transport_linearization(theta, x) {
                    Some(phi) => {
                        let m = phi.transpose() * df;
                        for a in 0..p {
                            for l in 0..k {
                                out[a * k + l] = m[(a, l)];
                            }
                        }
                    }
                    None => out.fill(f64::NAN),
                }
            })?;
            Ok(Some(DMatrix::from_row_slice(p, k, &v)))
        }
    }
}

/// A statistic of an `n`-point sample in `R^d` with values in `R^k`.
pub trait Estimator: Send + Sync {
    fn id(&self) -> &str;
    /// `k` for data of dimension `d`.
    fn output_dim(&self, d: usize) -> usize;
    fn value(&self, sample: &Sample) -> Result<DVector<f64>>;
    /// Per-point Jacobians; finite differences unless overridden.
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        finite_difference_jacobians(self, sample)
    }
    fn value_and_jacobians(&self, sample: &Sample) -> Result<(DVector<f64>, Jacobians)> {
        Ok((self.value(sample)?, self.jacobians(sample)?))
    }
    fn gradient_kind(&self) -> GradientKind;
    fn target(&self, _family: &dyn Family) -> Target {
        Target::None
    }
    /// Linear in the sample, so finite perturbations are exact.
    fn is_linear(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests;
