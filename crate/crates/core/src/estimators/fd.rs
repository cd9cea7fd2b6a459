use super::Estimator;
use crate::error::{Error, Result};
use crate::sample::{Jacobians, Sample};

/// `cbrt(machine epsilon)`; steps are `FD_STEP_SCALE · (1 + |x_ij|)`.
pub const FD_STEP_SCALE: f64 = 6.055_454_452_393_343e-6;

/// Central differences in every coordinate of every point.
pub fn finite_difference_jacobians<E: Estimator + ?Sized>(estimator: &E, sample: &Sample) -> Result<Jacobians> {
    let (n, d) = (sample.n(), sample.dim());
    let k = estimator.output_dim(d);
    let mut jac = Jacobians::zeros(n, d, k);
    let mut work = sample.clone();
    for i in 0..n {
        for a in 0..d {
            let x = sample.row(i)[a];
            let h = FD_STEP_SCALE * (1.0 + x.abs());
            work.row_mut(i)[a] = x + h;
            let up = estimator.value(&work).map_err(|_| Error::PerturbationFailure { index: i })?;
            work.row_mut(i)[a] = x - h;
            let down = estimator.value(&work).map_err(|_| Error::PerturbationFailure { index: i })?;
            work.row_mut(i)[a] = x;
            if up.iter().chain(down.iter()).any(|v| !v.is_finite()) {
                return Err(Error::PerturbationFailure { index: i });
            }
            for l in 0..k {
                jac.set(i, a, l, (up[l] - down[l]) / (2.0 * h));
            }
        }
    }
    Ok(jac)
}
