use super::builtin::{
    BleUniformScale, Composed, GaussMoments, LStatistic, Ols, PhiMean, ProductMean, SampleMax, SampleMean, SampleMedian,
    SampleVariance, SecondMomentMean,
};
use super::{Estimator, GradientKind, Target};
use crate::error::{Error, Result};
use crate::families::{Family, RegressionFamily};
use crate::sample::{Jacobians, Sample};
use crate::sdot2d::DualOptions;
use crate::wpe::{wpe_1d_with, wpe_2d_gradients, wpe_2d_with, wpe_gradients_1d, WpeOptions};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

/// Ids accepted by [`build_estimator`]; `ols:<path>` also reads a design from CSV.
pub const BUILTIN_ESTIMATOR_IDS: &[&str] = &[
    "sample_mean",
    "ble_uniform_scale",
    "sample_max",
    "sample_median",
    "second_moment_mean",
    "sqrt_second_moment",
    "phi_mean",
    "gauss2_moments",
    "sample_variance",
    "sample_variance_unbiased",
    "product_mean",
    "ols",
    "wpe_uniform_scale",
    "wpe_uniform_scale_variant",
    "wpe_uniform_scale_unbiased",
    "wpe_1d",
    "wpe_2d",
];

#[derive(Clone, Debug, Default)]
pub struct EstimatorOptions {
    /// Design of `ols`; the built-in regression design when absent.
    pub design: Option<DMatrix<f64>>,
    /// Window of the projection fits.
    pub window: Option<(f64, f64)>,
}

/// Builds an estimator; `phi_mean`, `wpe_1d` and `wpe_2d` need the family.
pub fn build_estimator(
    id: &str,
    family: Option<&Arc<dyn Family>>,
    options: &EstimatorOptions,
) -> Result<Arc<dyn Estimator>> {
    let need_family = || family.cloned().ok_or_else(|| Error::Config(format!("estimator `{id}` needs a family")));
    let est: Arc<dyn Estimator> = match id {
        "sample_mean" => Arc::new(SampleMean),
        "ble_uniform_scale" => Arc::new(BleUniformScale),
        "sample_max" => Arc::new(SampleMax),
        "sample_median" => Arc::new(SampleMedian),
        "second_moment_mean" => Arc::new(SecondMomentMean),
        "sqrt_second_moment" => Arc::new(Composed::sqrt_second_moment()),
        "phi_mean" => Arc::new(PhiMean::new(need_family()?)?),
        "gauss2_moments" => Arc::new(GaussMoments),
        "sample_variance" => Arc::new(SampleVariance::new(false)),
        "sample_variance_unbiased" => Arc::new(SampleVariance::new(true)),
        "product_mean" => Arc::new(ProductMean),
        "ols" => Arc::new(Ols::new(&options.design.clone().unwrap_or_else(RegressionFamily::default_design))?),
        "wpe_uniform_scale" => Arc::new(LStatistic::wpe_uniform_scale()),
        "wpe_uniform_scale_variant" => Arc::new(LStatistic::wpe_uniform_scale_variant()),
        "wpe_uniform_scale_unbiased" => Arc::new(LStatistic::wpe_uniform_scale_unbiased()),
        "wpe_1d" => Arc::new(Wpe1d::new(need_family()?, options.window)?),
        "wpe_2d" => Arc::new(Wpe2d::new(need_family()?, options.window)?),
        other => match other.strip_prefix("ols:") {
            Some(path) => Arc::new(Ols::new(&crate::harness::read_matrix_csv(Path::new(path))?)?),
            None => return Err(Error::Config(format!("unknown estimator id `{id}`"))),
        },
    };
    Ok(est)
}

/// Estimators addressable by id.
#[derive(Clone, Default)]
pub struct EstimatorCatalog {
    entries: BTreeMap<String, Arc<dyn Estimator>>,
}

impl EstimatorCatalog {
    pub fn get(&self, id: &str) -> Option<Arc<dyn Estimator>> {
        self.entries.get(id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn register(&mut self, estimator: Arc<dyn Estimator>) {
        self.entries.insert(estimator.id().to_string(), estimator);
    }
}

/// Every built-in estimator that does not depend on a family.
pub fn register_builtin_estimators() -> EstimatorCatalog {
    let mut c = EstimatorCatalog::default();
    for id in BUILTIN_ESTIMATOR_IDS {
        if let Ok(e) = build_estimator(id, None, &EstimatorOptions::default()) {
            c.register(e);
        }
    }
    c
}

/// Generic one dimensional projection estimator of a family.
pub struct Wpe1d {
    family: Arc<dyn Family>,
    options: WpeOptions,
}

impl Wpe1d {
    pub fn new(family: Arc<dyn Family>, window: Option<(f64, f64)>) -> Result<Self> {
        if family.data_dim() != 1 {
            return Err(Error::Config(format!("wpe_1d needs a one dimensional family, got `{}`", family.id())));
        }
        let options = WpeOptions { window: window.map(|w| vec![w]), ..Default::default() };
        Ok(Self { family, options })
    }
}

impl Estimator for Wpe1d {
    fn id(&self) -> &str {
        "wpe_1d"
    }
    fn output_dim(&self, _d: usize) -> usize {
        self.family.param_dim()
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(wpe_1d_with(&*self.family, sample, &self.options)?.theta_hat))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        self.value_and_jacobians(sample).map(|(_, j)| j)
    }
    fn value_and_jacobians(&self, sample: &Sample) -> Result<(DVector<f64>, Jacobians)> {
        let fit = wpe_1d_with(&*self.family, sample, &self.options)?;
        let grads = wpe_gradients_1d(&*self.family, sample, &fit)?;
        let p = fit.theta_hat.len();
        let mut j = Jacobians::zeros(sample.n(), 1, p);
        for (i, g) in grads.iter().enumerate() {
            for l in 0..p {
                j.set(i, 0, l, g[l]);
            }
        }
        Ok((DVector::from_vec(fit.theta_hat), j))
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, _family: &dyn Family) -> Target {
        Target::None
    }
}

/// Planar projection estimator through the semi-discrete solver.
pub struct Wpe2d {
    family: Arc<dyn Family>,
    options: WpeOptions,
    dual: DualOptions,
}

impl Wpe2d {
    pub fn new(family: Arc<dyn Family>, window: Option<(f64, f64)>) -> Result<Self> {
        if family.planar().is_none() {
            return Err(Error::Config(format!("wpe_2d needs a planar family, got `{}`", family.id())));
        }
        let options = WpeOptions { window: window.map(|w| vec![w]), grid: 9, ..Default::default() };
        Ok(Self { family, options, dual: DualOptions::default() })
    }
}

impl Estimator for Wpe2d {
    fn id(&self) -> &str {
        "wpe_2d"
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let pf = self.family.planar().expect("checked at construction");
        Ok(DVector::from_vec(wpe_2d_with(pf, sample, &self.options, &self.dual)?.fit.theta_hat))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        self.value_and_jacobians(sample).map(|(_, j)| j)
    }
    fn value_and_jacobians(&self, sample: &Sample) -> Result<(DVector<f64>, Jacobians)> {
        let pf = self.family.planar().expect("checked at construction");
        let fit = wpe_2d_with(pf, sample, &self.options, &self.dual)?;
        let grads = wpe_2d_gradients(pf, &fit, &self.dual)?;
        let mut j = Jacobians::zeros(sample.n(), 2, 1);
        for (i, g) in grads.iter().enumerate() {
            j.set(i, 0, 0, g[0]);
            j.set(i, 1, 0, g[1]);
        }
        Ok((DVector::from_vec(fit.fit.theta_hat), j))
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
}
