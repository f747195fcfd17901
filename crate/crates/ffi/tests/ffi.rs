use std::ffi::{c_char, c_int, CString};
use std::ptr;

use gtent_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let len = unsafe { gtent_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf.iter().take(len.min(255)).map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn session(toml: Option<&str>) -> *mut GtentSession {
    let text = toml.map(|t| CString::new(t).unwrap());
    let mut s = ptr::null_mut();
    let status = unsafe { gtent_session_new(text.as_ref().map_or(ptr::null(), |t| t.as_ptr()), &mut s) };
    assert_eq!(status, GtentStatus::Ok, "{}", last_error());
    s
}

#[test]
fn admissibility_radius_is_min_of_one_and_inverse_norm() {
    let mut m = 0.0;
    let x = [3.0, 4.0];
    assert_eq!(unsafe { gtent_admissibility_radius(x.as_ptr(), 2, &mut m) }, GtentStatus::Ok);
    assert_eq!(m, 0.2);
    let x = [0.5];
    assert_eq!(unsafe { gtent_admissibility_radius(x.as_ptr(), 1, &mut m) }, GtentStatus::Ok);
    assert_eq!(m, 1.0);
    assert_eq!(unsafe { gtent_admissibility_radius(ptr::null(), 1, &mut m) }, GtentStatus::NullPointer);
    assert!(last_error().contains("x is null"));
}

#[test]
fn ball_measure_matches_the_one_dimensional_closed_form() {
    // gamma([-1, 1]) = erf(1/sqrt 2)
    let c = [0.0];
    let (mut v, mut e) = (0.0, 0.0);
    assert_eq!(unsafe { gtent_ball_measure(c.as_ptr(), 1, 1.0, 1e-12, &mut v, &mut e) }, GtentStatus::Ok);
    assert!((v - 0.682_689_492_137_085_9).abs() < 1e-11, "{v}");
    assert!(e <= 1e-12);

    let c = [0.1, 0.2, 0.3];
    let status = unsafe { gtent_ball_measure(c.as_ptr(), 3, 0.5, 1e-10, &mut v, ptr::null_mut()) };
    assert_eq!(status, GtentStatus::ToleranceUnreachable);
    let c = [2.0];
    let status = unsafe { gtent_ball_measure(c.as_ptr(), 1, -1.0, 1e-10, &mut v, ptr::null_mut()) };
    assert_eq!(status, GtentStatus::InvalidArgument, "{}", last_error());
}

#[test]
fn layer_cube_counts_and_overflow() {
    let mut count = 0u64;
    for (l, want) in [(0, 4), (1, 48), (2, 768), (3, 12288)] {
        assert_eq!(unsafe { gtent_layer_cube_count(2, 0, l, &mut count) }, GtentStatus::Ok);
        assert_eq!(count, want);
    }
    assert_eq!(unsafe { gtent_layer_cube_count(3, 0, 40, &mut count) }, GtentStatus::Overflow);
}

#[test]
fn sessions_expose_active_pairs() {
    let s = session(None);
    let mut len = 0;
    assert_eq!(unsafe { gtent_session_active_len(s, &mut len) }, GtentStatus::Ok);
    assert!(len > 0);
    let (mut y, mut t) = ([0.0], 0.0);
    for a in [0, len / 2, len - 1] {
        assert_eq!(unsafe { gtent_session_pair(s, a, y.as_mut_ptr(), &mut t) }, GtentStatus::Ok);
        let mut m = 0.0;
        unsafe { gtent_admissibility_radius(y.as_ptr(), 1, &mut m) };
        assert!(t > 0.0 && t < m);
    }
    assert_eq!(unsafe { gtent_session_pair(s, len, y.as_mut_ptr(), &mut t) }, GtentStatus::InvalidArgument);
    unsafe { gtent_session_free(s) };
}

#[test]
fn bad_configs_are_reported() {
    let text = CString::new("q = 0.5\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { gtent_session_new(text.as_ptr(), &mut s) }, GtentStatus::Config);
    assert!(s.is_null());
    assert!(!last_error().is_empty());
    unsafe { gtent_session_free(ptr::null_mut()) };
}

#[test]
fn norms_scale_and_decompositions_reconstruct() {
    let s = session(None);
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { gtent_function_sample(s, 1, true, &mut f) }, GtentStatus::Ok);
    let mut norm = 0.0;
    assert_eq!(unsafe { gtent_t1q_norm(f, 2.0, 1.0, &mut norm) }, GtentStatus::Ok);
    assert!(norm > 0.0);

    // Doubling every value doubles the norm.
    let mut len = 0;
    unsafe { gtent_session_active_len(s, &mut len) };
    let mut ones = ptr::null_mut();
    let values = vec![1.0; len];
    assert_eq!(unsafe { gtent_function_from_values(s, values.as_ptr(), len, &mut ones) }, GtentStatus::Ok);
    let twos_values = vec![2.0; len];
    let mut twos = ptr::null_mut();
    unsafe { gtent_function_from_values(s, twos_values.as_ptr(), len, &mut twos) };
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        gtent_t1q_norm(ones, 2.0, 1.0, &mut a);
        gtent_t1q_norm(twos, 2.0, 1.0, &mut b);
    }
    assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    let status = unsafe { gtent_function_from_values(s, values.as_ptr(), len - 1, &mut ones) };
    assert_eq!(status, GtentStatus::DimensionMismatch);

    let mut d = ptr::null_mut();
    assert_eq!(unsafe { gtent_decompose(s, f, &mut d) }, GtentStatus::Ok, "{}", last_error());
    let mut summary = GtentDecompositionSummary::default();
    assert_eq!(unsafe { gtent_decomposition_summary(d, 1e-9, &mut summary) }, GtentStatus::Ok);
    assert!(summary.terms > 0);
    assert!(summary.reconstruction_error <= 1e-9);
    assert!(summary.sum_lambda <= 3.0 * summary.norm);
    assert_eq!(summary.checks_passed, 1);
    unsafe {
        gtent_decomposition_free(d);
        gtent_function_free(twos);
        gtent_function_free(ones);
        gtent_function_free(f);
        gtent_session_free(s);
    }
}

#[test]
fn suites_run_through_the_abi() {
    let s = session(Some("[samples]\ntransfer = 200\n"));
    let mut passed: c_int = 0;
    assert_eq!(unsafe { gtent_run_suite(s, 1, &mut passed) }, GtentStatus::Ok, "{}", last_error());
    assert_eq!(passed, 1);
    assert_eq!(unsafe { gtent_run_suite(s, 99, &mut passed) }, GtentStatus::InvalidArgument);
    unsafe { gtent_session_free(s) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gtent.h")).unwrap();
    for name in [
        "gtent_last_error",
        "gtent_ball_measure",
        "gtent_session_new",
        "gtent_function_sample",
        "gtent_decompose",
        "gtent_run_suite",
        "GTENT_STATUS_TOLERANCE_UNREACHABLE",
        "typedef struct GtentSession GtentSession",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
