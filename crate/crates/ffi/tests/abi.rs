use std::ffi::{CStr, CString};
use std::ptr;
use wcrlab_ffi::*;

fn family(id: &str) -> *mut WcrFamily {
    let id = CString::new(id).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { wcr_family_new(id.as_ptr(), &mut f) }, WcrStatus::Ok);
    f
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(wcr_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn information_and_sampling() {
    let f = family("pareto");
    unsafe {
        assert_eq!(wcr_family_param_dim(f), 1);
        let mut j = [0.0];
        assert_eq!(wcr_information(f, [3.0].as_ptr(), 1, j.as_mut_ptr(), 1), WcrStatus::Ok);
        assert!((j[0] - 2.0 / 3.0).abs() < 1e-12);

        let mut xs = [0.0; 16];
        assert_eq!(wcr_family_sample(f, [3.0].as_ptr(), 1, 16, 4, xs.as_mut_ptr(), 16), WcrStatus::Ok);
        assert!(xs.iter().all(|x| *x >= 1.0));
        assert_eq!(wcr_family_sample(f, [3.0].as_ptr(), 1, 16, 4, xs.as_mut_ptr(), 8), WcrStatus::BufferTooSmall);

        assert_eq!(wcr_information(f, [1.0].as_ptr(), 1, j.as_mut_ptr(), 1), WcrStatus::InvalidArgument);
        assert!(last_error().contains("outside the domain"), "{}", last_error());
        wcr_family_free(f);
    }
}

#[test]
fn sensitivity_of_the_sample_mean() {
    let f = family("location:gaussian");
    let id = CString::new("sample_mean").unwrap();
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(wcr_estimator_new(id.as_ptr(), f, &mut e), WcrStatus::Ok);
        let (mut s, mut se) = ([0.0], [0.0]);
        let st = wcr_sensitivity(f, e, [0.0].as_ptr(), 1, 25, 50, 1, s.as_mut_ptr(), se.as_mut_ptr(), 1);
        assert_eq!(st, WcrStatus::Ok);
        assert!((s[0] - 1.0 / 25.0).abs() < 1e-15);
        wcr_estimator_free(e);
        wcr_family_free(f);
    }
}

#[test]
fn projection_fit_and_transport() {
    let f = family("location:gaussian");
    let data = [0.3, 1.2, -0.7, 0.9, 0.1];
    let (mut t, mut obj) = ([0.0], 0.0);
    unsafe {
        assert_eq!(wcr_wpe_fit(f, data.as_ptr(), 5, 1, t.as_mut_ptr(), 1, &mut obj), WcrStatus::Ok);
        wcr_family_free(f);
    }
    assert!((t[0] - 0.36).abs() < 1e-9);
    assert!(obj > 0.0);

    let g = family("plane:uniform");
    let sites = [0.25, 0.25, 0.75, 0.25, 0.25, 0.75, 0.75, 0.75];
    let (mut w, mut m, mut c) = ([1.0; 4], [0.0; 4], 0.0);
    unsafe {
        let st = wcr_sdot_solve(g, 0.0, sites.as_ptr(), 4, w.as_mut_ptr(), m.as_mut_ptr(), &mut c);
        assert_eq!(st, WcrStatus::Ok);
        let dup = [0.5, 0.5, 0.5, 0.5];
        assert_eq!(wcr_sdot_solve(g, 0.0, dup.as_ptr(), 2, w.as_mut_ptr(), ptr::null_mut(), ptr::null_mut()), WcrStatus::NumericFailure);
        wcr_family_free(g);
    }
    assert!(w.iter().all(|b| b.abs() < 1e-12));
    assert!(m.iter().all(|v| (v - 0.25).abs() < 1e-12));
    assert!((c - 1.0 / 24.0).abs() < 1e-12);
}

#[test]
fn null_and_unknown_inputs_are_reported() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(wcr_family_new(ptr::null(), &mut f), WcrStatus::NullPointer);
        let bad = CString::new("no-such-family").unwrap();
        assert_eq!(wcr_family_new(bad.as_ptr(), &mut f), WcrStatus::InvalidArgument);
        assert!(f.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(wcr_family_param_dim(ptr::null()), 0);
        wcr_family_free(ptr::null_mut());
        let mut j = [0.0];
        assert_eq!(wcr_information(ptr::null(), [0.0].as_ptr(), 1, j.as_mut_ptr(), 1), WcrStatus::NullPointer);
    }
    assert!(!unsafe { CStr::from_ptr(wcr_version()) }.to_bytes().is_empty());
}
