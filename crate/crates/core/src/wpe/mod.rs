//! Wasserstein projection estimators `θ̂_n = argmin_θ W₂²(P_θ, P̄_n)`.

mod covariance;
mod one_d;
mod planar;

pub use covariance::wpe_asymptotic_covariance;
pub use one_d::{default_window, wpe_1d, wpe_1d_with, wpe_gradients_1d, wpe_scale_closed_form, WpeObjective};
pub use planar::{wpe_2d, wpe_2d_gradients, wpe_2d_with, Wpe2dFit};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WpeMethod {
    Newton,
    GoldenSection,
    QuasiNewton,
    Bracketing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WpeFit {
    pub theta_hat: Vec<f64>,
    /// `W₂²(P_θ̂, P̄_n)`
    pub objective: f64,
    /// `‖∂G_n/∂θ‖` at `θ̂`.
    pub first_order_residual: f64,
    pub iterations: usize,
    pub method: WpeMethod,
}

/// Search controls shared by the one and two dimensional fits.
#[derive(Clone, Debug)]
pub struct WpeOptions {
    /// Per-coordinate search box; a band around the pilot estimate when `None`.
    pub window: Option<Vec<(f64, f64)>>,
    /// Grid points used to bracket minimizers.
    pub grid: usize,
    pub max_iter: usize,
}

impl Default for WpeOptions {
    fn default() -> Self {
        Self { window: None, grid: 17, max_iter: 100 }
    }
}
