use super::information::{expect_box, expect_quantile};
use super::{check_theta, Base1d, Family, Integrand, ParamDomain, Prob, TransportStructure};
use crate::error::{Error, Result};
use crate::quadrature::gl16;
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Potentials driving a gradient flow.
#[derive(Clone)]
pub enum Potential {
    /// `φ(x) = aᵀx`
    Linear { direction: Vec<f64> },
    /// `φ(x) = ‖x‖²/2`
    Quadratic { d: usize },
    /// `φ ≡ 0`
    Zero { d: usize },
    /// `φ(x) = Σ log cosh x_a`
    LogCosh { d: usize },
    Custom {
        name: String,
        d: usize,
        value: ScalarFn,
        gradient: GradientFn,
        laplacian: ScalarFn,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({})", self.name())
    }
}

impl Potential {
    pub fn name(&self) -> &str {
        match self {
            Potential::Linear { .. } => "linear",
            Potential::Quadratic { .. } => "quadratic",
            Potential::Zero { .. } => "zero",
            Potential::LogCosh { .. } => "logcosh",
            Potential::Custom { name, .. } => name,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Potential::Linear { direction } => direction.len(),
            Potential::Quadratic { d } | Potential::Zero { d } | Potential::LogCosh { d } | Potential::Custom { d, .. } => *d,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero { .. } => true,
            Potential::Linear { direction } => direction.iter().all(|a| *a == 0.0),
            _ => false,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Linear { direction } => direction.iter().zip(x).map(|(a, x)| a * x).sum(),
            Potential::Quadratic { .. } => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Potential::Zero { .. } => 0.0,
            Potential::LogCosh { .. } => x.iter().map(|v| log_cosh(*v)).sum(),
            Potential::Custom { value, .. } => value(x),
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Potential::Linear { direction } => out.copy_from_slice(direction),
            Potential::Quadratic { .. } => out.copy_from_slice(x),
            Potential::Zero { .. } => out.fill(0.0),
            Potential::LogCosh { .. } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v.tanh();
                }
            }
            Potential::Custom { gradient, .. } => gradient(x, out),
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Linear { .. } | Potential::Zero { .. } => 0.0,
            Potential::Quadratic { d } => *d as f64,
            Potential::LogCosh { .. } => x.iter().map(|v| 1.0 / v.cosh().powi(2)).sum(),
            Potential::Custom { laplacian, .. } => laplacian(x),
        }
    }
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// The family `P_θ = (Ψ_θ)_# P₀` where `Ψ_θ` is the time-`θ` map of
/// `u' = ∇φ(u)`. Its transport linearization is `∇φ`; it is a transport
/// family with estimand `θ` and structure parameterization `∫₀^θ Λ`.
#[derive(Clone, Debug)]
pub struct FlowFamily {
    id: String,
    potential: Potential,
    base: Base1d,
    step: f64,
    domain: ParamDomain,
}

impl FlowFamily {
    pub fn new(potential: Potential, base: Base1d, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("flow step must be positive, got {step}")));
        }
        let d = potential.dim();
        if d == 0 {
            return Err(Error::Config("flow potential has dimension 0".into()));
        }
        let id = if d == 1 {
            format!("flow:{}", potential.name())
        } else {
            format!("flow:{}:{d}", potential.name())
        };
        Ok(Self { id, potential, base, step, domain: ParamDomain::unbounded(1) })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Integrates `(u, ℓ)' = (∇φ(u), Δφ(u))` for signed time `t` from `(x, 0)`
    /// with classical RK4; `ℓ(t)` is the log Jacobian determinant of `Ψ_t` at `x`.
    fn integrate(&self, x: &[f64], t: f64, index: usize, with_logdet: bool) -> Result<(Vec<f64>, f64)> {
        let d = x.len();
        let mut u = x.to_vec();
        let mut ell = 0.0;
        if t == 0.0 || self.potential.is_zero() {
            return Ok((u, 0.0));
        }
        let steps = (t.abs() / self.step).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut k = vec![vec![0.0; d]; 4];
        let mut tmp = vec![0.0; d];
        for _ in 0..steps {
            let mut lk = [0.0; 4];
            for s in 0..4 {
                let c = match s {
                    0 => 0.0,
                    3 => h,
                    _ => 0.5 * h,
                };
                for a in 0..d {
                    tmp[a] = u[a] + if s == 0 { 0.0 } else { c * k[s - 1][a] };
                }
                self.potential.gradient(&tmp, &mut k[s]);
                if with_logdet {
                    lk[s] = self.potential.laplacian(&tmp);
                }
            }
            for a in 0..d {
                u[a] += h / 6.0 * (k[0][a] + 2.0 * k[1][a] + 2.0 * k[2][a] + k[3][a]);
            }
            ell += h / 6.0 * (lk[0] + 2.0 * lk[1] + 2.0 * lk[2] + lk[3]);
            if u.iter().any(|v| !v.is_finite()) || !ell.is_finite() {
                return Err(Error::IntegrationDiverged { sample: index, theta: t });
            }
        }
        Ok((u, ell))
    }

    /// `Ψ_θ(x)`
    pub fn flow(&self, theta: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.integrate(x, theta, 0, false)?.0)
    }

    fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.potential.gradient(x, &mut g);
        g
    }

    fn base_box(&self) -> Vec<(f64, f64)> {
        vec![self.base.effective_support(); self.potential.dim()]
    }
}

impl Family for FlowFamily {
    fn id(&self) -> &str {
        &self.id
    }

    fn data_dim(&self) -> usize {
        self.potential.dim()
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
        match self.integrate(x, -theta[0], 0, true) {
            Ok((x0, ell)) => x0.iter().map(|v| self.base.pdf(*v)).product::<f64>() * ell.exp(),
            Err(_) => f64::NAN,
        }
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        let d = self.data_dim();
        let mut data = Vec::with_capacity(n * d);
        let mut x0 = vec![0.0; d];
        for i in 0..n {
            for v in x0.iter_mut() {
                *v = self.base.draw(rng);
            }
            data.extend(self.integrate(&x0, theta[0], i, false)?.0);
        }
        Ok(Sample::new(n, d, data))
    }

    fn transport_linearization(&self, _theta: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_column_slice(x.len(), 1, &self.grad_phi(x)))
    }

    fn cdf(&self, theta: &[f64], x: f64) -> Option<Prob> {
        if self.data_dim() != 1 {
            return None;
        }
        let x0 = self.integrate(&[x], -theta[0], 0, false).ok()?.0[0];
        Some(self.base.cdf(x0))
    }

    fn quantile(&self, theta: &[f64], u: Prob) -> Option<f64> {
        if self.data_dim() != 1 {
            return None;
        }
        self.integrate(&[self.base.quantile(u)], theta[0], 0, false).ok().map(|r| r.0[0])
    }

    fn quantile_grad(&self, theta: &[f64], u: Prob) -> Option<DVector<f64>> {
        let x = self.quantile(theta, u)?;
        Some(DVector::from_element(1, self.grad_phi(&[x])[0]))
    }

    fn quantile_hessian(&self, theta: &[f64], u: Prob) -> Option<DMatrix<f64>> {
        let x = self.quantile(theta, u)?;
        let g = self.grad_phi(&[x])[0];
        Some(DMatrix::from_element(1, 1, self.potential.laplacian(&[x]) * g))
    }

    fn support_1d(&self, theta: &[f64]) -> Option<(f64, f64)> {
        if self.data_dim() != 1 {
            return None;
        }
        let (lo, hi) = self.base.support();
        let map = |v: f64| {
            if v.is_finite() {
                self.flow(theta[0], &[v]).map(|r| r[0]).unwrap_or(v)
            } else {
                v
            }
        };
        Some((map(lo), map(hi)))
    }

    fn transport_structure(&self) -> Option<&dyn TransportStructure> {
        (!self.potential.is_zero()).then_some(self as &dyn TransportStructure)
    }

    fn expectation_override(&self, theta: &[f64], dim: usize, f: Integrand) -> Option<Result<Vec<f64>>> {
        let t = theta[0];
        let pushed = |x0: &[f64], out: &mut [f64]| match self.flow(t, x0) {
            Ok(x) => f(&x, out),
            Err(_) => out.fill(f64::NAN),
        };
        Some(match self.data_dim() {
            1 => expect_quantile(&|u| self.base.quantile(u), dim, &pushed),
            2 => expect_box(&self.base_box(), &|x| self.base.pdf(x[0]) * self.base.pdf(x[1]), dim, &pushed),
            d => Err(Error::Unsupported(format!("flow expectations in dimension {d}"))),
        })
    }

    fn integration_box(&self, _theta: &[f64]) -> Option<Vec<(f64, f64)>> {
        None
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [-0.5, -0.2, 0.0, 0.3, 0.6].iter().map(|&t| vec![t]).collect()
    }
}

impl TransportStructure for FlowFamily {
    fn potential_dim(&self) -> usize {
        1
    }

    fn potential(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, self.potential.value(x))
    }

    fn potential_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(x.len(), 1, &self.grad_phi(x))
    }

    fn lambda(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let v = super::expectation(self, theta, 1, &|x, out| {
            out[0] = self.grad_phi(x).iter().map(|g| g * g).sum();
        })?;
        Ok(DMatrix::from_element(1, 1, v[0]))
    }

    fn parameterization(&self, theta: &[f64]) -> Result<DVector<f64>> {
        let t = theta[0];
        let mut acc = 0.0;
        for (s, w) in gl16().mapped(0.0, t) {
            acc += w * self.lambda(&[s])?[(0, 0)];
        }
        Ok(DVector::from_element(1, acc))
    }

    fn parameterization_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.lambda(theta)
    }
}
