//! Families on planar supports used by the semi-discrete engine.

use super::geometry::{ConvexPolygon, Point};
use crate::error::{Error, Result};
use crate::families::{check_theta, Family, ParamDomain};
use crate::rng::RngStream;
use crate::sample::Sample;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::function::erf::{erf, erfc_inv};
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

/// A one-parameter family of densities on a convex planar support.
pub trait PlanarFamily: Family {
    fn support(&self, theta: f64) -> ConvexPolygon;
    fn density2(&self, theta: f64, x: Point) -> f64;
    /// `∂p_θ/∂θ`; `None` selects a central difference.
    fn dtheta_density(&self, _theta: f64, _x: Point) -> Option<f64> {
        None
    }
    /// `Φ_θ(x)`
    fn transport_field(&self, theta: f64, x: Point) -> Point;
    /// Whether the support depends on `θ`.
    fn moving_support(&self) -> bool {
        false
    }
}

/// Step for the `∂p/∂θ` central difference.
pub const DENSITY_STEP: f64 = 1e-5;

/// `∂p_θ/∂θ` from the family or by central difference.
pub fn dtheta_density(family: &dyn PlanarFamily, theta: f64, x: Point) -> f64 {
    family.dtheta_density(theta, x).unwrap_or_else(|| {
        let h = DENSITY_STEP * (1.0 + theta.abs());
        (family.density2(theta + h, x) - family.density2(theta - h, x)) / (2.0 * h)
    })
}

pub fn build_planar_family(id: &str) -> Result<Arc<dyn Family>> {
    Ok(match id {
        "plane:uniform" => Arc::new(UniformSquare::default()),
        "plane:location:x" => Arc::new(PlaneLocation::new(0)),
        "plane:location:y" => Arc::new(PlaneLocation::new(1)),
        "plane:tilt" => Arc::new(TiltFamily::default()),
        "plane:tgauss-scale" => Arc::new(TruncatedGaussianScale::default()),
        _ => return Err(Error::Config(format!("unknown planar family `{id}`"))),
    })
}

macro_rules! planar_family_common {
    () => {
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
            self.density2(theta[0], [x[0], x[1]])
        }

        fn transport_linearization(&self, theta: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
            let v = self.transport_field(theta[0], [x[0], x[1]]);
            Some(DMatrix::from_column_slice(2, 1, &v))
        }

        fn integration_box(&self, theta: &[f64]) -> Option<Vec<(f64, f64)>> {
            Some(self.support(theta[0]).bounding_box().to_vec())
        }

        fn planar(&self) -> Option<&dyn PlanarFamily> {
            Some(self)
        }
    };
}

/// Uniform density on the unit square, independent of `θ`.
#[derive(Clone, Debug)]
pub struct UniformSquare {
    domain: ParamDomain,
}

impl Default for UniformSquare {
    fn default() -> Self {
        Self { domain: ParamDomain::unbounded(1) }
    }
}

impl Family for UniformSquare {
    planar_family_common!();

    fn id(&self) -> &str {
        "plane:uniform"
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        Ok(Sample::new(n, 2, (0..2 * n).map(|_| rng.random::<f64>()).collect()))
    }

    fn info_closed_form(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(1, 1))
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }
}

impl PlanarFamily for UniformSquare {
    fn support(&self, _theta: f64) -> ConvexPolygon {
        ConvexPolygon::unit_square()
    }

    fn density2(&self, _theta: f64, x: Point) -> f64 {
        if (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1]) {
            1.0
        } else {
            0.0
        }
    }

    fn dtheta_density(&self, _theta: f64, _x: Point) -> Option<f64> {
        Some(0.0)
    }

    fn transport_field(&self, _theta: f64, _x: Point) -> Point {
        [0.0, 0.0]
    }
}

/// Uniform density on `[-1/2, 1/2]² + θ e_axis`; the support moves with `θ`.
#[derive(Clone, Debug)]
pub struct PlaneLocation {
    id: String,
    axis: usize,
    domain: ParamDomain,
}

impl PlaneLocation {
    pub fn new(axis: usize) -> Self {
        assert!(axis < 2);
        Self {
            id: format!("plane:location:{}", if axis == 0 { "x" } else { "y" }),
            axis,
            domain: ParamDomain::unbounded(1),
        }
    }

    fn shift(&self, theta: f64) -> Point {
        let mut s = [0.0, 0.0];
        s[self.axis] = theta;
        s
    }
}

impl Family for PlaneLocation {
    planar_family_common!();

    fn id(&self) -> &str {
        &self.id
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        let s = self.shift(theta[0]);
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            data.push(rng.random::<f64>() - 0.5 + s[0]);
            data.push(rng.random::<f64>() - 0.5 + s[1]);
        }
        Ok(Sample::new(n, 2, data))
    }

    fn info_closed_form(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, 1.0))
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        Some(vec![sample.rows().map(|r| r[self.axis]).sum::<f64>() / sample.n() as f64])
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [-0.4, 0.0, 0.3, 1.0, 2.5].iter().map(|&t| vec![t]).collect()
    }
}

impl PlanarFamily for PlaneLocation {
    fn support(&self, theta: f64) -> ConvexPolygon {
        ConvexPolygon::rectangle(-0.5, 0.5, -0.5, 0.5).translated(self.shift(theta))
    }

    fn density2(&self, theta: f64, x: Point) -> f64 {
        let s = self.shift(theta);
        let inside = (x[0] - s[0]).abs() <= 0.5 && (x[1] - s[1]).abs() <= 0.5;
        if inside {
            1.0
        } else {
            0.0
        }
    }

    fn transport_field(&self, _theta: f64, _x: Point) -> Point {
        self.shift(1.0)
    }

    fn moving_support(&self) -> bool {
        true
    }
}

/// Product density `Π (1 + θ(x_k - 1/2))` on the unit square, `|θ| < 2`.
#[derive(Clone, Debug)]
pub struct TiltFamily {
    domain: ParamDomain,
}

impl Default for TiltFamily {
    fn default() -> Self {
        Self { domain: ParamDomain::new(vec![-2.0], vec![2.0]) }
    }
}

impl TiltFamily {
    fn marginal(theta: f64, x: f64) -> f64 {
        1.0 + theta * (x - 0.5)
    }

    /// Inverse of `F(x) = x + θ(x² - x)/2`.
    fn marginal_quantile(theta: f64, u: f64) -> f64 {
        let a = 1.0 - 0.5 * theta;
        2.0 * u / (a + (a * a + 2.0 * theta * u).sqrt())
    }

    fn field(theta: f64, x: f64) -> f64 {
        x * (1.0 - x) / (2.0 * Self::marginal(theta, x))
    }
}

impl Family for TiltFamily {
    planar_family_common!();

    fn id(&self) -> &str {
        "plane:tilt"
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        Ok(Sample::new(
            n,
            2,
            (0..2 * n).map(|_| Self::marginal_quantile(theta[0], rng.random::<f64>())).collect(),
        ))
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        let m = sample.as_slice().iter().sum::<f64>() / (2 * sample.n()) as f64;
        Some(vec![(12.0 * (m - 0.5)).clamp(-1.9, 1.9)])
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [-1.5, -0.5, 0.0, 0.7, 1.5].iter().map(|&t| vec![t]).collect()
    }
}

impl PlanarFamily for TiltFamily {
    fn support(&self, _theta: f64) -> ConvexPolygon {
        ConvexPolygon::unit_square()
    }

    fn density2(&self, theta: f64, x: Point) -> f64 {
        if (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1]) {
            Self::marginal(theta, x[0]) * Self::marginal(theta, x[1])
        } else {
            0.0
        }
    }

    fn dtheta_density(&self, theta: f64, x: Point) -> Option<f64> {
        let (f0, f1) = (Self::marginal(theta, x[0]), Self::marginal(theta, x[1]));
        Some((x[0] - 0.5) * f1 + (x[1] - 0.5) * f0)
    }

    fn transport_field(&self, theta: f64, x: Point) -> Point {
        [Self::field(theta, x[0]), Self::field(theta, x[1])]
    }
}

/// Independent coordinates, each `N(0, θ²)` truncated to `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct TruncatedGaussianScale {
    domain: ParamDomain,
}

impl Default for TruncatedGaussianScale {
    fn default() -> Self {
        Self { domain: ParamDomain::new(vec![0.05], vec![f64::INFINITY]) }
    }
}

fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn std_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}

impl TruncatedGaussianScale {
    /// Normalizer `Z = P(|θ N| ≤ 1)` and its derivative.
    fn normalizer(theta: f64) -> (f64, f64) {
        let z = erf(1.0 / (theta * SQRT_2));
        let dz = -2.0 / (theta * theta) * std_pdf(1.0 / theta);
        (z, dz)
    }

    fn marginal(theta: f64, x: f64) -> f64 {
        let (z, _) = Self::normalizer(theta);
        std_pdf(x / theta) / (theta * z)
    }

    fn marginal_dtheta(theta: f64, x: f64) -> f64 {
        let (z, dz) = Self::normalizer(theta);
        Self::marginal(theta, x) * (x * x / theta.powi(3) - 1.0 / theta - dz / z)
    }

    /// `-∂_θF / f` for one coordinate.
    fn field(theta: f64, x: f64) -> f64 {
        let (z, dz) = Self::normalizer(theta);
        let f = Self::marginal(theta, x);
        let cdf = (std_cdf(x / theta) - std_cdf(-1.0 / theta)) / z;
        let dnum = -x / (theta * theta) * std_pdf(x / theta) - std_pdf(1.0 / theta) / (theta * theta);
        let dcdf = dnum / z - cdf * dz / z;
        -dcdf / f
    }

    fn marginal_quantile(theta: f64, u: f64) -> f64 {
        let lo = std_cdf(-1.0 / theta);
        let p = lo + u * (1.0 - 2.0 * lo);
        let z = -SQRT_2 * erfc_inv(2.0 * p);
        (theta * z).clamp(-1.0, 1.0)
    }
}

impl Family for TruncatedGaussianScale {
    planar_family_common!();

    fn id(&self) -> &str {
        "plane:tgauss-scale"
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Sample> {
        check_theta(self, theta)?;
        Ok(Sample::new(
            n,
            2,
            (0..2 * n).map(|_| Self::marginal_quantile(theta[0], rng.random::<f64>())).collect(),
        ))
    }

    fn pilot_estimate(&self, sample: &Sample) -> Option<Vec<f64>> {
        let m2 = sample.as_slice().iter().map(|x| x * x).sum::<f64>() / (2 * sample.n()) as f64;
        Some(vec![m2.sqrt().max(0.1)])
    }

    fn reference_thetas(&self) -> Vec<Vec<f64>> {
        [0.3, 0.5, 0.8, 1.2, 2.0].iter().map(|&t| vec![t]).collect()
    }
}

impl PlanarFamily for TruncatedGaussianScale {
    fn support(&self, _theta: f64) -> ConvexPolygon {
        ConvexPolygon::rectangle(-1.0, 1.0, -1.0, 1.0)
    }

    fn density2(&self, theta: f64, x: Point) -> f64 {
        if x[0].abs() <= 1.0 && x[1].abs() <= 1.0 {
            Self::marginal(theta, x[0]) * Self::marginal(theta, x[1])
        } else {
            0.0
        }
    }

    fn dtheta_density(&self, theta: f64, x: Point) -> Option<f64> {
        let (f0, f1) = (Self::marginal(theta, x[0]), Self::marginal(theta, x[1]));
        Some(Self::marginal_dtheta(theta, x[0]) * f1 + f0 * Self::marginal_dtheta(theta, x[1]))
    }

    fn transport_field(&self, theta: f64, x: Point) -> Point {
        [Self::field(theta, x[0]), Self::field(theta, x[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdot2d::integrate::cell_nodes;

    fn families() -> Vec<Arc<dyn Family>> {
        ["plane:uniform", "plane:location:x", "plane:location:y", "plane:tilt", "plane:tgauss-scale"]
            .iter()
            .map(|id| build_planar_family(id).unwrap())
            .collect()
    }

    #[test]
    fn densities_integrate_to_one() {
        for f in families() {
            let pf = f.planar().unwrap();
            for t in f.reference_thetas() {
                let s = pf.support(t[0]);
                // fine rule: a single cell cannot resolve the narrow Gaussians
                let mass: f64 =
                    cell_nodes(s.vertices(), 5).into_iter().map(|(x, w)| w * pf.density2(t[0], x)).sum();
                assert!((mass - 1.0).abs() < 1e-6, "{} at {t:?}: {mass}", f.id());
            }
        }
    }

    #[test]
    fn analytic_density_derivatives_match_differences() {
        for f in families() {
            let pf = f.planar().unwrap();
            if pf.moving_support() {
                continue;
            }
            for t in f.reference_thetas() {
                let x = [0.37, 0.61];
                let h = 1e-5;
                let fd = (pf.density2(t[0] + h, x) - pf.density2(t[0] - h, x)) / (2.0 * h);
                let an = pf.dtheta_density(t[0], x).unwrap();
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{}: {fd} vs {an}", f.id());
            }
        }
    }

    #[test]
    fn transport_field_solves_the_continuity_equation() {
        // ∂_θ p + div(p Φ) = 0 checked by central differences
        for f in families() {
            let pf = f.planar().unwrap();
            if pf.moving_support() {
                continue;
            }
            for t in f.reference_thetas() {
                let t = t[0];
                let x = [0.21, 0.43];
                let h = 1e-5;
                let flux = |y: Point, a: usize| pf.density2(t, y) * pf.transport_field(t, y)[a];
                let mut div = 0.0;
                for a in 0..2 {
                    let mut up = x;
                    let mut dn = x;
                    up[a] += h;
                    dn[a] -= h;
                    div += (flux(up, a) - flux(dn, a)) / (2.0 * h);
                }
                let dp = dtheta_density(pf, t, x);
                assert!((dp + div).abs() < 1e-6, "{} at {t}: {dp} vs {div}", f.id());
            }
        }
    }
}
