//! C ABI over `wcrlab`.
//!
//! Families and estimators are opaque handles created from catalog ids and
//! released with the matching `_free`. Every call returns a [`WcrStatus`];
//! on failure the message is kept per thread and read with [`wcr_last_error`].
//! Matrices are row-major, samples are `n x d` row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use wcrlab::estimators::{build_estimator, Estimator, EstimatorOptions};
use wcrlab::families::{build_family, wasserstein_information, Family, FamilyOptions};
use wcrlab::rng::RngStream;
use wcrlab::sample::Sample;
use wcrlab::sdot2d::{solve_dual, DualOptions, Point};
use wcrlab::sensitivity::cosensitivity_mc;
use wcrlab::wpe::{wpe_1d, wpe_2d};
use wcrlab::Error;

/// Outcome of a call. Codes 2 and 3 match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WcrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// A parametric family.
pub struct WcrFamily {
    inner: Arc<dyn Family>,
}

/// A statistic of a sample.
pub struct WcrEstimator {
    inner: Arc<dyn Estimator>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Null(&'static str),
    Buffer { needed: usize, given: usize },
    Core(Error),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WcrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WcrStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            WcrStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { needed, given })) => {
            set_error(&format!("output buffer holds {given} values, {needed} needed"));
            WcrStatus::BufferTooSmall
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(&msg);
            WcrStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            if e.exit_code() == 2 {
                WcrStatus::InvalidArgument
            } else {
                WcrStatus::NumericFailure
            }
        }
        Err(_) => {
            set_error("internal panic");
            WcrStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Invalid(format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    if len < needed {
        return Err(Failure::Buffer { needed, given: len });
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn family_ref<'a>(p: *const WcrFamily) -> Result<&'a Arc<dyn Family>, Failure> {
    p.as_ref().map(|f| &f.inner).ok_or(Failure::Null("family"))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn wcr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a family from a catalog id such as `"location:gaussian"` or `"pareto"`.
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wcr_family_new(id: *const c_char, out: *mut *mut WcrFamily) -> WcrStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let inner = build_family(text(id, "id")?, &FamilyOptions::default())?;
        *out = Box::into_raw(Box::new(WcrFamily { inner }));
        Ok(())
    })
}

/// # Safety
/// `family` must come from [`wcr_family_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wcr_family_free(family: *mut WcrFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Parameter dimension `p`, or 0 for a null handle.
///
/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wcr_family_param_dim(family: *const WcrFamily) -> usize {
    family.as_ref().map_or(0, |f| f.inner.param_dim())
}

/// Data dimension `d`, or 0 for a null handle.
///
/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wcr_family_data_dim(family: *const WcrFamily) -> usize {
    family.as_ref().map_or(0, |f| f.inner.data_dim())
}

/// Draws `n` points at `theta` (length `p`) into `out` (`n * d` values).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wcr_family_sample(
    family: *const WcrFamily,
    theta: *const f64,
    p: usize,
    n: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> WcrStatus {
    guard(|| {
        let f = family_ref(family)?;
        let theta = slice(theta, p, "theta")?;
        let s = f.sample(theta, n, &mut RngStream::new(seed, 0))?;
        out_slice(out, out_len, s.as_slice().len(), "out")?.copy_from_slice(s.as_slice());
        Ok(())
    })
}

/// Wasserstein information `J(theta)` into `out` (`p * p`, row-major).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wcr_information(
    family: *const WcrFamily,
    theta: *const f64,
    p: usize,
    out: *mut f64,
    out_len: usize,
) -> WcrStatus {
    guard(|| {
        let f = family_ref(family)?;
        let j = wasserstein_information(&**f, slice(theta, p, "theta")?)?.matrix;
        let dst = out_slice(out, out_len, p * p, "out")?;
        for r in 0..p {
            for c in 0..p {
                dst[r * p + c] = j[(r, c)];
            }
        }
        Ok(())
    })
}

/// Creates an estimator from a catalog id. `family` may be null for
/// family-independent estimators.
///
/// # Safety
/// `id` must be a NUL-terminated string, `family` null or live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wcr_estimator_new(
    id: *const c_char,
    family: *const WcrFamily,
    out: *mut *mut WcrEstimator,
) -> WcrStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let fam = family.as_ref().map(|f| &f.inner);
        let inner = build_estimator(text(id, "id")?, fam, &EstimatorOptions::default())?;
        *out = Box::into_raw(Box::new(WcrEstimator { inner }));
        Ok(())
    })
}

/// # Safety
/// `estimator` must come from [`wcr_estimator_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wcr_estimator_free(estimator: *mut WcrEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// Monte Carlo cosensitivity (`k * k`, row-major) and its standard errors.
/// `stderr_out` may be null.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wcr_sensitivity(
    family: *const WcrFamily,
    estimator: *const WcrEstimator,
    theta: *const f64,
    p: usize,
    n: usize,
    reps: usize,
    seed: u64,
    out: *mut f64,
    stderr_out: *mut f64,
    out_len: usize,
) -> WcrStatus {
    guard(|| {
        let f = family_ref(family)?;
        let est = estimator.as_ref().map(|e| &e.inner).ok_or(Failure::Null("estimator"))?;
        let r = cosensitivity_mc(&**f, slice(theta, p, "theta")?, &**est, n, reps, seed)?;
        let k = r.estimate.nrows();
        let dst = out_slice(out, out_len, k * k, "out")?;
        for a in 0..k {
            for b in 0..k {
                dst[a * k + b] = r.estimate[(a, b)];
            }
        }
        if !stderr_out.is_null() {
            let se = std::slice::from_raw_parts_mut(stderr_out, k * k);
            for a in 0..k {
                for b in 0..k {
                    se[a * k + b] = r.stderr[(a, b)];
                }
            }
        }
        Ok(())
    })
}

/// Projection estimate from `n` points of dimension `d` (1, or 2 for planar
/// families). Writes `p` values to `theta_out` and the fitted `W₂²` to
/// `objective_out` when that is not null.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wcr_wpe_fit(
    family: *const WcrFamily,
    data: *const f64,
    n: usize,
    d: usize,
    theta_out: *mut f64,
    p: usize,
    objective_out: *mut f64,
) -> WcrStatus {
    guard(|| {
        let f = family_ref(family)?;
        if d != f.data_dim() {
            return Err(Failure::Invalid(format!("data dimension {d}, family `{}` has {}", f.id(), f.data_dim())));
        }
        let sample = Sample::new(n, d, slice(data, n * d, "data")?.to_vec());
        let fit = match f.planar() {
            Some(pf) => wpe_2d(pf, &sample, None)?,
            None => wpe_1d(&**f, &sample)?,
        };
        out_slice(theta_out, p, fit.theta_hat.len(), "theta_out")?.copy_from_slice(&fit.theta_hat);
        if let Some(o) = objective_out.as_mut() {
            *o = fit.objective;
        }
        Ok(())
    })
}

/// Semi-discrete transport from a planar family at `theta` to `n` equal-mass
/// sites (`n * 2` values). Writes `n` weights, `n` masses and `W₂²`.
/// `masses_out` and `w2sq_out` may be null.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wcr_sdot_solve(
    family: *const WcrFamily,
    theta: f64,
    sites: *const f64,
    n: usize,
    weights_out: *mut f64,
    masses_out: *mut f64,
    w2sq_out: *mut f64,
) -> WcrStatus {
    guard(|| {
        let f = family_ref(family)?;
        let pf = f.planar().ok_or_else(|| Failure::Invalid(format!("family `{}` is not planar", f.id())))?;
        let pts: Vec<Point> = slice(sites, 2 * n, "sites")?.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let r = solve_dual(pf, theta, &pts, &DualOptions::default(), None)?;
        out_slice(weights_out, n, n, "weights_out")?.copy_from_slice(&r.weights);
        if !masses_out.is_null() {
            std::slice::from_raw_parts_mut(masses_out, n).copy_from_slice(&r.masses);
        }
        if let Some(w) = w2sq_out.as_mut() {
            *w = r.w2sq;
        }
        Ok(())
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn wcr_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}
