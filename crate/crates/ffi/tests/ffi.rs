//! The C interface exercised through its Rust symbols, plus a C compile-and-run check of the
//! generated header against the static library.

use idem_ffi::*;
use std::ffi::{CStr, CString, c_char};
use std::ptr;

fn last_error() -> String {
    let p = idem_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn matrix(rows: usize, cols: usize, re: &[f64]) -> *mut IdemMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { idem_matrix_new(rows, cols, re.as_ptr(), ptr::null(), &mut m) }, IdemStatus::Ok);
    m
}

fn channel(json: &str) -> *mut IdemChannel {
    let text = CString::new(json).unwrap();
    let mut ch = ptr::null_mut();
    let st = unsafe { idem_channel_from_json(text.as_ptr(), &mut ch) };
    assert_eq!(st, IdemStatus::Ok, "{}", last_error());
    ch
}

fn fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn take_string(p: *mut c_char) -> serde_json::Value {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { idem_string_free(p) };
    serde_json::from_str(&s).unwrap()
}

#[test]
fn divergence_of_diagonal_states() {
    let rho = matrix(2, 2, &[0.5, 0.0, 0.0, 0.5]);
    let sigma = matrix(2, 2, &[0.25, 0.0, 0.0, 0.75]);
    let mut v = 0.0;
    let st = unsafe { idem_divergence(rho, sigma, IdemDivergenceKind::Umegaki as u32, 0.0, &mut v) };
    assert_eq!(st, IdemStatus::Ok);
    let want = 0.5 * (0.5f64 / 0.25).log2() + 0.5 * (0.5f64 / 0.75).log2();
    assert!((v - want).abs() < 1e-12);
    let st = unsafe { idem_divergence(rho, rho, IdemDivergenceKind::HypothesisTesting as u32, 0.1, &mut v) };
    assert_eq!(st, IdemStatus::Ok);
    assert!((v + 0.9f64.log2()).abs() < 1e-9);
    let (mut r, mut c) = (0, 0);
    assert_eq!(unsafe { idem_matrix_dims(rho, &mut r, &mut c) }, IdemStatus::Ok);
    assert_eq!((r, c), (2, 2));
    unsafe {
        idem_matrix_free(rho);
        idem_matrix_free(sigma);
    }
}

#[test]
fn orthogonal_supports_give_infinity() {
    let zero = matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let one = matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let mut v = 0.0;
    assert_eq!(unsafe { idem_divergence(zero, one, IdemDivergenceKind::Dmax as u32, 0.0, &mut v) }, IdemStatus::Ok);
    assert_eq!(v, f64::INFINITY);
    unsafe {
        idem_matrix_free(zero);
        idem_matrix_free(one);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut m = ptr::null_mut();
    let st = unsafe { idem_matrix_new(2, 2, ptr::null(), ptr::null(), &mut m) };
    assert_eq!(st, IdemStatus::NullPointer);
    assert!(last_error().contains("re"));

    let rho = matrix(2, 2, &[0.5, 0.0, 0.0, 0.5]);
    let not_state = matrix(2, 2, &[2.0, 0.0, 0.0, 0.5]);
    let mut v = 0.0;
    assert_eq!(unsafe { idem_divergence(rho, not_state, 0, 0.0, &mut v) }, IdemStatus::InvalidArgument);
    assert_eq!(unsafe { idem_divergence(rho, rho, 99, 0.0, &mut v) }, IdemStatus::InvalidArgument);
    assert!(last_error().contains("99"));
    assert_eq!(unsafe { idem_divergence(rho, rho, IdemDivergenceKind::Petz as u32, 1.0, &mut v) }, IdemStatus::InvalidArgument);

    let bad = CString::new(fixture("malformed.json")).unwrap();
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { idem_channel_from_json(bad.as_ptr(), &mut ch) }, IdemStatus::Parse);
    assert!(ch.is_null());

    let not_idem = channel(&fixture("not_idempotent.json"));
    assert_eq!(unsafe { idem_d_idq(not_idem, true, &mut v) }, IdemStatus::NotIdempotent);

    // A successful call clears the message.
    assert_eq!(unsafe { idem_divergence(rho, rho, 0, 0.0, &mut v) }, IdemStatus::Ok);
    assert!(idem_last_error().is_null());
    unsafe {
        idem_channel_free(not_idem);
        idem_matrix_free(rho);
        idem_matrix_free(not_state);
    }
}

#[test]
fn closed_forms_through_handles() {
    let dep = channel(&fixture("dephasing2.json"));
    let (mut plain, mut cb) = (0.0, 0.0);
    assert_eq!(unsafe { idem_d_idq(dep, false, &mut plain) }, IdemStatus::Ok);
    assert_eq!(unsafe { idem_d_idq(dep, true, &mut cb) }, IdemStatus::Ok);
    assert!((plain - 1.0).abs() < 1e-12 && (cb - 1.0).abs() < 1e-12);
    let (mut c, mut c_cb) = (0.0, 0.0);
    assert_eq!(unsafe { idem_pimsner_popa(dep, &mut c, &mut c_cb) }, IdemStatus::Ok);
    assert!((c - 2.0).abs() < 1e-12 && (c_cb - 2.0).abs() < 1e-12);
    let mut d = 0;
    assert_eq!(unsafe { idem_channel_dim(dep, &mut d) }, IdemStatus::Ok);
    assert_eq!(d, 2);

    let id = channel(&fixture("identity2.json"));
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { idem_formula_json(id, dep, 2.0, 0, 1, &mut s) }, IdemStatus::Ok);
    let v = take_string(s);
    assert_eq!(v["route"], "identity_vs_channel");
    assert_eq!(v["cb"]["value_bits"], 1.0);
    unsafe {
        idem_channel_free(dep);
        idem_channel_free(id);
    }
}

#[test]
fn counterexample_report() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { idem_counterexample_json(0, 0, &mut s) }, IdemStatus::Ok);
    let v = take_string(s);
    let bound = v["bound_bits"].as_f64().unwrap();
    assert!((bound - 6f64.log2()).abs() < 1e-12);
    assert!(v["gap_bits"].as_f64().unwrap() > 0.0);
}

#[test]
fn null_frees_are_no_ops() {
    unsafe {
        idem_matrix_free(ptr::null_mut());
        idem_channel_free(ptr::null_mut());
        idem_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(idem_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_and_links_from_c() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/idem.h");
    assert!(header.exists(), "build script did not write the header");
    // Test binaries live next to the library artifacts of the same build.
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.join("libidem_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let src = std::env::temp_dir().join(format!("idem_ffi_smoke_{}.c", std::process::id()));
    let exe = src.with_extension("bin");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "idem.h"
int main(void) {
    double re[4] = {0.5, 0.0, 0.0, 0.5}, v = -1.0;
    IdemMatrix *rho = NULL;
    if (idem_matrix_new(2, 2, re, NULL, &rho) != IDEM_STATUS_OK) return 1;
    if (idem_divergence(rho, rho, IDEM_DIVERGENCE_KIND_UMEGAKI, 0.0, &v) != IDEM_STATUS_OK) return 2;
    idem_matrix_free(rho);
    if (fabs(v) > 1e-12) return 3;
    if (idem_divergence(NULL, NULL, 0, 0.0, &v) != IDEM_STATUS_NULL_POINTER) return 4;
    if (idem_last_error() == NULL) return 5;
    printf("ok %s\n", idem_version());
    return 0;
}
"#,
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
    let _ = std::fs::remove_file(&src);
    let _ = std::fs::remove_file(&exe);
}
