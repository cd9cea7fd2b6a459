use super::{Estimator, GradientKind, MomentMap, Target};
use crate::error::{Error, Result};
use crate::families::Family;
use crate::sample::{Jacobians, Sample};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Indices sorted by value; equal values keep index order.
pub(crate) fn stable_order(xs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    order
}

/// Lowest index holding the same value as `order[rank]`, logging a tie if any.
fn lowest_index_at_rank(xs: &[f64], order: &[usize], rank: usize, what: &str) -> usize {
    let v = xs[order[rank]];
    let lowest = (0..xs.len()).find(|&i| xs[i] == v).unwrap_or(order[rank]);
    if xs.iter().filter(|&&x| x == v).count() > 1 {
        log::debug!("tie at the {what}: value {v}, gradient assigned to index {lowest}");
    }
    lowest
}

fn scalars(sample: &Sample, id: &str) -> Result<Vec<f64>> {
    if sample.dim() != 1 {
        return Err(Error::Unsupported(format!("`{id}` needs scalar data, got d = {}", sample.dim())));
    }
    if sample.n() == 0 {
        return Err(Error::Domain(format!("`{id}` of an empty sample")));
    }
    Ok(sample.as_slice().to_vec())
}

fn moment(f: impl Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>) + Send + Sync + 'static) -> Target {
    let map: MomentMap = Arc::new(f);
    Target::Moment(map)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Mean summed in sorted order, so it does not depend on the sample order.
fn sorted_mean(xs: &[f64]) -> f64 {
    sorted(xs).iter().sum::<f64>() / xs.len() as f64
}

/// `n⁻¹ Σ X_i`
#[derive(Debug, Clone, Default)]
pub struct SampleMean;

impl Estimator for SampleMean {
    fn id(&self) -> &str {
        "sample_mean"
    }
    fn output_dim(&self, d: usize) -> usize {
        d
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let (n, d) = (sample.n(), sample.dim());
        let mut m = DVector::zeros(d);
        for x in sample.rows() {
            for a in 0..d {
                m[a] += x[a];
            }
        }
        Ok(m / n as f64)
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let (n, d) = (sample.n(), sample.dim());
        let mut j = Jacobians::zeros(n, d, d);
        for i in 0..n {
            for a in 0..d {
                j.set(i, a, a, 1.0 / n as f64);
            }
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, _family: &dyn Family) -> Target {
        moment(|x| (DVector::from_column_slice(x), DMatrix::identity(x.len(), x.len())))
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `2 X̄`, the best linear unbiased estimator for `U[0, θ]`.
#[derive(Debug, Clone, Default)]
pub struct BleUniformScale;

impl Estimator for BleUniformScale {
    fn id(&self) -> &str {
        "ble_uniform_scale"
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let xs = scalars(sample, self.id())?;
        Ok(DVector::from_element(1, 2.0 * xs.iter().sum::<f64>() / xs.len() as f64))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let n = scalars(sample, self.id())?.len();
        let mut j = Jacobians::zeros(n, 1, 1);
        for i in 0..n {
            j.set(i, 0, 0, 2.0 / n as f64);
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, family: &dyn Family) -> Target {
        if family.id() == "uniform-scale" {
            Target::Estimand
        } else {
            Target::None
        }
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `X_(n)`
#[derive(Debug, Clone, Default)]
pub struct SampleMax;

impl Estimator for SampleMax {
    fn id(&self) -> &str {
        "sample_max"
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let xs = scalars(sample, self.id())?;
        Ok(DVector::from_element(1, xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let xs = scalars(sample, self.id())?;
        let order = stable_order(&xs);
        let i = lowest_index_at_rank(&xs, &order, xs.len() - 1, "maximum");
        let mut j = Jacobians::zeros(xs.len(), 1, 1);
        j.set(i, 0, 0, 1.0);
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
}

/// Middle order statistic; the average of the two central ones for even `n`.
#[derive(Debug, Clone, Default)]
pub struct SampleMedian;

impl SampleMedian {
    fn ranks(n: usize) -> Vec<(usize, f64)> {
        if n % 2 == 1 {
            vec![(n / 2, 1.0)]
        } else {
            vec![(n / 2 - 1, 0.5), (n / 2, 0.5)]
        }
    }
}

impl Estimator for SampleMedian {
    fn id(&self) -> &str {
        "sample_median"
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let xs = scalars(sample, self.id())?;
        let order = stable_order(&xs);
        let v = Self::ranks(xs.len()).iter().map(|&(r, w)| w * xs[order[r]]).sum();
        Ok(DVector::from_element(1, v))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let xs = scalars(sample, self.id())?;
        let order = stable_order(&xs);
        let mut j = Jacobians::zeros(xs.len(), 1, 1);
        let ranks = Self::ranks(xs.len());
        if ranks.len() == 2 && xs[order[ranks[0].0]] == xs[order[ranks[1].0]] {
            let i = lowest_index_at_rank(&xs, &order, ranks[0].0, "median");
            j.set(i, 0, 0, 1.0);
        } else {
            for (r, w) in ranks {
                let i = lowest_index_at_rank(&xs, &order, r, "median");
                j.set(i, 0, 0, w);
            }
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, family: &dyn Family) -> Target {
        // every registered location base is symmetric about zero
        if family.id().starts_with("location:") && family.data_dim() == 1 {
            Target::Estimand
        } else {
            Target::None
        }
    }
}

/// `n⁻¹ Σ ‖X_i‖²`
#[derive(Debug, Clone, Default)]
pub struct SecondMomentMean;

impl Estimator for SecondMomentMean {
    fn id(&self) -> &str {
        "second_moment_mean"
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let s: f64 = sample.as_slice().iter().map(|v| v * v).sum();
        Ok(DVector::from_element(1, s / sample.n() as f64))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let (n, d) = (sample.n(), sample.dim());
        let mut j = Jacobians::zeros(n, d, 1);
        for i in 0..n {
            for a in 0..d {
                j.set(i, a, 0, 2.0 * sample.row(i)[a] / n as f64);
            }
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, _family: &dyn Family) -> Target {
        moment(|x| {
            let s = x.iter().map(|v| v * v).sum();
            (DVector::from_element(1, s), DMatrix::from_fn(x.len(), 1, |a, _| 2.0 * x[a]))
        })
    }
}

/// `n⁻¹ Σ φ(X_i)` for the potential of a transport family.
#[derive(Debug, Clone)]
pub struct PhiMean {
    family: Arc<dyn Family>,
    id: String,
}

impl PhiMean {
    pub fn new(family: Arc<dyn Family>) -> Result<Self> {
        if family.transport_structure().is_none() {
            return Err(Error::Config(format!("family `{}` has no transport potential", family.id())));
        }
        let id = format!("phi_mean[{}]", family.id());
        Ok(Self { family, id })
    }
}

impl Estimator for PhiMean {
    fn id(&self) -> &str {
        &self.id
    }
    fn output_dim(&self, _d: usize) -> usize {
        self.family.transport_structure().map_or(0, |s| s.potential_dim())
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let s = self.family.transport_structure().expect("checked at construction");
        let mut m = DVector::zeros(s.potential_dim());
        for x in sample.rows() {
            m += s.potential(x);
        }
        Ok(m / sample.n() as f64)
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let s = self.family.transport_structure().expect("checked at construction");
        let (n, d, k) = (sample.n(), sample.dim(), s.potential_dim());
        let mut j = Jacobians::zeros(n, d, k);
        for i in 0..n {
            let dphi = s.potential_jacobian(sample.row(i));
            for a in 0..d {
                for l in 0..k {
                    j.set(i, a, l, dphi[(a, l)] / n as f64);
                }
            }
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, _family: &dyn Family) -> Target {
        let fam = self.family.clone();
        moment(move |x| {
            let s = fam.transport_structure().expect("checked at construction");
            (s.potential(x), s.potential_jacobian(x))
        })
    }
}

/// `(X̄, n⁻¹ Σ X_i²)`
#[derive(Debug, Clone, Default)]
pub struct GaussMoments;

impl Estimator for GaussMoments {
    fn id(&self) -> &str {
        "gauss2_moments"
    }
    fn output_dim(&self, _d: usize) -> usize {
        2
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let xs = scalars(sample, self.id())?;
        let n = xs.len() as f64;
        Ok(DVector::from_vec(vec![
            xs.iter().sum::<f64>() / n,
            xs.iter().map(|x| x * x).sum::<f64>() / n,
        ]))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let xs = scalars(sample, self.id())?;
        let n = xs.len();
        let mut j = Jacobians::zeros(n, 1, 2);
        for (i, x) in xs.iter().enumerate() {
            j.set(i, 0, 0, 1.0 / n as f64);
            j.set(i, 0, 1, 2.0 * x / n as f64);
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, _family: &dyn Family) -> Target {
        moment(|x| {
            (
                DVector::from_vec(vec![x[0], x[0] * x[0]]),
                DMatrix::from_row_slice(1, 2, &[1.0, 2.0 * x[0]]),
            )
        })
    }
}

/// Sample variance with divisor `n` or `n - 1`.
#[derive(Debug, Clone)]
pub struct SampleVariance {
    unbiased: bool,
}

impl SampleVariance {
    pub fn new(unbiased: bool) -> Self {
        Self { unbiased }
    }
    fn divisor(&self, n: usize) -> f64 {
        if self.unbiased {
            n as f64 - 1.0
        } else {
            n as f64
        }
    }
}

impl Estimator for SampleVariance {
    fn id(&self) -> &str {
        if self.unbiased {
            "sample_variance_unbiased"
        } else {
            "sample_variance"
        }
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let xs = scalars(sample, self.id())?;
        if self.unbiased && xs.len() < 2 {
            return Err(Error::Domain("unbiased variance needs n >= 2".into()));
        }
        let m = sorted_mean(&xs);
        let ss: f64 = sorted(&xs).iter().map(|x| (x - m) * (x - m)).sum();
        Ok(DVector::from_element(1, ss / self.divisor(xs.len())))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let xs = scalars(sample, self.id())?;
        let m = sorted_mean(&xs);
        let c = 2.0 / self.divisor(xs.len());
        let mut j = Jacobians::zeros(xs.len(), 1, 1);
        for (i, x) in xs.iter().enumerate() {
            j.set(i, 0, 0, c * (x - m));
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, family: &dyn Family) -> Target {
        if self.unbiased && family.id() == "gauss2" {
            // σ² as a function of θ = (μ, σ²)
            Target::Function(Arc::new(|_| DMatrix::from_column_slice(2, 1, &[0.0, 1.0])))
        } else {
            Target::None
        }
    }
}

/// `(WᵀW)⁻¹ WᵀX` for a fixed design `W`.
#[derive(Debug, Clone)]
pub struct Ols {
    /// `W (WᵀW)⁻¹`, `n x p`; row `i` is the gradient in `x_i`.
    hat: DMatrix<f64>,
}

impl Ols {
    pub fn new(design: &DMatrix<f64>) -> Result<Self> {
        let gram = design.transpose() * design;
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::DegenerateInformation("design matrix is rank deficient".into()))?;
        let hat = chol.solve(&design.transpose()).transpose();
        Ok(Self { hat })
    }

    pub fn gradient_matrix(&self) -> &DMatrix<f64> {
        &self.hat
    }

    fn check(&self, sample: &Sample) -> Result<()> {
        if sample.dim() != 1 || sample.n() != self.hat.nrows() {
            return Err(Error::Domain(format!(
                "ols expects {} scalar responses, got {} points in dimension {}",
                self.hat.nrows(),
                sample.n(),
                sample.dim()
            )));
        }
        Ok(())
    }
}

impl Estimator for Ols {
    fn id(&self) -> &str {
        "ols"
    }
    fn output_dim(&self, _d: usize) -> usize {
        self.hat.ncols()
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        self.check(sample)?;
        Ok(self.hat.transpose() * DVector::from_column_slice(sample.as_slice()))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        self.check(sample)?;
        let (n, p) = self.hat.shape();
        let mut j = Jacobians::zeros(n, 1, p);
        for i in 0..n {
            for l in 0..p {
                j.set(i, 0, l, self.hat[(i, l)]);
            }
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, family: &dyn Family) -> Target {
        if family.id() == "regression" && family.fixed_sample_size() == Some(self.hat.nrows()) {
            Target::Estimand
        } else {
            Target::None
        }
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `Σ c_i X_(i)` with weights `c_i` depending on `n` only.
#[derive(Clone)]
pub struct LStatistic {
    id: String,
    weights: Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>,
    unbiased_for_uniform_scale: bool,
}

impl std::fmt::Debug for LStatistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LStatistic").field("id", &self.id).finish()
    }
}

impl LStatistic {
    pub fn new(id: &str, weights: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self { id: id.to_string(), weights: Arc::new(weights), unbiased_for_uniform_scale: false }
    }

    /// `(3/(2n²)) Σ (2i − 1) X_(i)`, the projection estimator for `U[0, θ]`.
    pub fn wpe_uniform_scale() -> Self {
        Self::new("wpe_uniform_scale", |i, n| 3.0 * (2 * i - 1) as f64 / (2.0 * (n * n) as f64))
    }

    /// `(3/(n(n−1))) Σ i X_(i)`; its mean is `θ(2n+1)/(2(n−1))`, so it is not unbiased.
    pub fn wpe_uniform_scale_variant() -> Self {
        Self::new("wpe_uniform_scale_variant", |i, n| 3.0 * i as f64 / (n * (n - 1)) as f64)
    }

    /// `(6/(n(2n+1))) Σ i X_(i)`, unbiased for `θ` under `U[0, θ]`.
    pub fn wpe_uniform_scale_unbiased() -> Self {
        let mut s = Self::new("wpe_uniform_scale_unbiased", |i, n| 6.0 * i as f64 / (n * (2 * n + 1)) as f64);
        s.unbiased_for_uniform_scale = true;
        s
    }

    fn coefficients(&self, xs: &[f64]) -> Vec<(usize, f64)> {
        let n = xs.len();
        stable_order(xs).into_iter().enumerate().map(|(r, i)| (i, (self.weights)(r + 1, n))).collect()
    }
}

impl Estimator for LStatistic {
    fn id(&self) -> &str {
        &self.id
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        let xs = scalars(sample, &self.id)?;
        let v = self.coefficients(&xs).iter().map(|&(i, c)| c * xs[i]).sum();
        Ok(DVector::from_element(1, v))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        let xs = scalars(sample, &self.id)?;
        let mut j = Jacobians::zeros(xs.len(), 1, 1);
        for (i, c) in self.coefficients(&xs) {
            j.set(i, 0, 0, c);
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, family: &dyn Family) -> Target {
        if self.unbiased_for_uniform_scale && family.id() == "uniform-scale" {
            Target::Estimand
        } else {
            Target::None
        }
    }
}

/// `n⁻¹ Σ X_i1 X_i2` for planar data.
#[derive(Debug, Clone, Default)]
pub struct ProductMean;

impl Estimator for ProductMean {
    fn id(&self) -> &str {
        "product_mean"
    }
    fn output_dim(&self, _d: usize) -> usize {
        1
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        if sample.dim() != 2 {
            return Err(Error::Unsupported("product_mean needs planar data".into()));
        }
        let s: f64 = sample.rows().map(|x| x[0] * x[1]).sum();
        Ok(DVector::from_element(1, s / sample.n() as f64))
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        if sample.dim() != 2 {
            return Err(Error::Unsupported("product_mean needs planar data".into()));
        }
        let n = sample.n();
        let mut j = Jacobians::zeros(n, 2, 1);
        for i in 0..n {
            let x = sample.row(i);
            j.set(i, 0, 0, x[1] / n as f64);
            j.set(i, 1, 0, x[0] / n as f64);
        }
        Ok(j)
    }
    fn gradient_kind(&self) -> GradientKind {
        GradientKind::Analytic
    }
    fn target(&self, _family: &dyn Family) -> Target {
        moment(|x| (DVector::from_element(1, x[0] * x[1]), DMatrix::from_column_slice(2, 1, &[x[1], x[0]])))
    }
}

/// `t ↦ g(t)`, with `Dg` of shape `k x m`.
pub type OutputMap = Arc<dyn Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>) + Send + Sync>;

/// `g ∘ T`, differentiated by the chain rule.
#[derive(Clone)]
pub struct Composed {
    id: String,
    inner: Arc<dyn Estimator>,
    outputs: usize,
    map: OutputMap,
}

impl Composed {
    pub fn new(id: &str, inner: Arc<dyn Estimator>, outputs: usize, map: OutputMap) -> Self {
        Self { id: id.to_string(), inner, outputs, map }
    }

    /// `√(n⁻¹ Σ ‖X_i‖²)`
    pub fn sqrt_second_moment() -> Self {
        Self::new(
            "sqrt_second_moment",
            Arc::new(SecondMomentMean),
            1,
            Arc::new(|t: &DVector<f64>| {
                let r = t[0].sqrt();
                (DVector::from_element(1, r), DMatrix::from_element(1, 1, 0.5 / r))
            }),
        )
    }
}

impl Estimator for Composed {
    fn id(&self) -> &str {
        &self.id
    }
    fn output_dim(&self, _d: usize) -> usize {
        self.outputs
    }
    fn value(&self, sample: &Sample) -> Result<DVector<f64>> {
        Ok((self.map)(&self.inner.value(sample)?).0)
    }
    fn jacobians(&self, sample: &Sample) -> Result<Jacobians> {
        self.value_and_jacobians(sample).map(|(_, j)| j)
    }
    fn value_and_jacobians(&self, sample: &Sample) -> Result<(DVector<f64>, Jacobians)> {
        let (t, inner) = self.inner.value_and_jacobians(sample)?;
        let (g, dg) = (self.map)(&t);
        let (n, d) = (sample.n(), sample.dim());
        let mut j = Jacobians::zeros(n, d, self.outputs);
        for i in 0..n {
            let block = inner.block(i) * &dg;
            for a in 0..d {
                for m in 0..self.outputs {
                    j.set(i, a, m, block[(a, m)]);
                }
            }
        }
        Ok((g, j))
    }
    fn gradient_kind(&self) -> GradientKind {
        self.inner.gradient_kind()
    }
}
