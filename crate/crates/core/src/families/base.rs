use super::Prob;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{PI, SQRT_2};

/// One dimensional base laws for location and scale families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Base1d {
    Gaussian { sd: f64 },
    /// Density `exp(-|x|/b) / 2b`.
    Laplace { b: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Base1d {
    pub const STANDARD_GAUSSIAN: Base1d = Base1d::Gaussian { sd: 1.0 };
    pub const STANDARD_LAPLACE: Base1d = Base1d::Laplace { b: 1.0 };

    pub fn name(&self) -> &'static str {
        match self {
            Base1d::Gaussian { .. } => "gaussian",
            Base1d::Laplace { .. } => "laplace",
            Base1d::Uniform { .. } => "uniform",
        }
    }

    /// The law of `c X`, `c > 0`.
    pub fn scaled(&self, c: f64) -> Base1d {
        match *self {
            Base1d::Gaussian { sd } => Base1d::Gaussian { sd: sd * c },
            Base1d::Laplace { b } => Base1d::Laplace { b: b * c },
            Base1d::Uniform { lo, hi } => Base1d::Uniform { lo: lo * c, hi: hi * c },
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Base1d::Gaussian { sd } => (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt()),
            Base1d::Laplace { b } => (-x.abs() / b).exp() / (2.0 * b),
            Base1d::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> Prob {
        match *self {
            Base1d::Gaussian { sd } => {
                let z = x / (sd * SQRT_2);
                Prob::from_parts(0.5 * erfc(-z), 0.5 * erfc(z))
            }
            Base1d::Laplace { b } => {
                if x < 0.0 {
                    let lo = 0.5 * (x / b).exp();
                    Prob::from_parts(lo, 1.0 - lo)
                } else {
                    Prob::from_upper(0.5 * (-x / b).exp())
                }
            }
            Base1d::Uniform { lo, hi } => {
                let x = x.clamp(lo, hi);
                Prob::from_parts((x - lo) / (hi - lo), (hi - x) / (hi - lo))
            }
        }
    }

    pub fn quantile(&self, u: Prob) -> f64 {
        let (p, q) = (u.lower(), u.upper());
        match *self {
            Base1d::Gaussian { sd } => {
                if p < 0.5 {
                    -sd * SQRT_2 * erfc_inv(2.0 * p)
                } else {
                    sd * SQRT_2 * erfc_inv(2.0 * q)
                }
            }
            Base1d::Laplace { b } => {
                if p < 0.5 {
                    b * (2.0 * p).ln()
                } else {
                    -b * (2.0 * q).ln()
                }
            }
            Base1d::Uniform { lo, hi } => {
                if p < 0.5 {
                    lo + p * (hi - lo)
                } else {
                    hi - q * (hi - lo)
                }
            }
        }
    }

    /// Derivative of the quantile function in `u`, `1 / p(F⁻¹(u))`.
    pub fn quantile_density(&self, u: Prob) -> f64 {
        1.0 / self.pdf(self.quantile(u))
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Base1d::Uniform { lo, hi } => (lo, hi),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Interval outside which the mass is below roughly `1e-17`.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            Base1d::Gaussian { sd } => (-9.0 * sd, 9.0 * sd),
            Base1d::Laplace { b } => (-40.0 * b, 40.0 * b),
            Base1d::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Base1d::Uniform { lo, hi } => 0.5 * (lo + hi),
            _ => 0.0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            Base1d::Gaussian { sd } => sd * sd,
            Base1d::Laplace { b } => 2.0 * b * b,
            Base1d::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
        }
    }

    pub fn variance(&self) -> f64 {
        self.second_moment() - self.mean().powi(2)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Base1d::Gaussian { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            Base1d::Laplace { b } => {
                let u: f64 = rng.random();
                let e = -(1.0 - u).ln();
                if rng.random::<bool>() {
                    b * e
                } else {
                    -b * e
                }
            }
            Base1d::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}
