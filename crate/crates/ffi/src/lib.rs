//! C interface to `idem`.
//!
//! Handles are opaque and owned by the caller once returned; each has a matching `_free`.
//! Every fallible call returns an [`IdemStatus`] and writes its result through an out
//! pointer only on success. On failure the message is kept per thread and can be read with
//! [`idem_last_error`] until the next call on that thread. Panics never cross the boundary.

use idem::analysis::{analyze_pair, require_block};
use idem::blockchan::{AnyChannel, ChannelSpec};
use idem::closedform::{d_idq, d_idq_cb, pimsner_popa};
use idem::counterexample;
use idem::matcore::{C64, ComplexMatrix};
use idem::oracle::OptimizerConfig;
use idem::states::{DensityMatrix, Divergence, chernoff, hypothesis_testing};
use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::ptr;

/// Dense complex matrix.
pub struct IdemMatrix(ComplexMatrix);

/// Channel parsed from its JSON description.
pub struct IdemChannel(AnyChannel);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    NotIdempotent = 4,
    Numerical = 5,
    Panic = 6,
}

/// Values accepted by the `kind` argument of [`idem_divergence`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdemDivergenceKind {
    Umegaki = 0,
    Petz = 1,
    Sandwiched = 2,
    Dmax = 3,
    Dmin = 4,
    HypothesisTesting = 5,
    Chernoff = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: IdemStatus,
    message: String,
}

impl Failure {
    fn new(status: IdemStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<idem::Error> for Failure {
    fn from(e: idem::Error) -> Self {
        use idem::Error as E;
        let status = match e {
            E::Parse(_) => IdemStatus::Parse,
            E::NotIdempotent { .. } => IdemStatus::NotIdempotent,
            E::Linalg(_) | E::NonFinite | E::FunctionDomain { .. } => IdemStatus::Numerical,
            _ => IdemStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

fn set_error(message: Option<String>) {
    // Interior NULs cannot occur in our messages; replace defensively rather than drop them.
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("no interior NUL"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IdemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            IdemStatus::Ok
        }
        Ok(Err(fail)) => {
            set_error(Some(fail.message));
            fail.status
        }
        Err(_) => {
            set_error(Some("internal error: panic inside idem".into()));
            IdemStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() { Err(Failure::new(IdemStatus::NullPointer, format!("{what} is null"))) } else { Ok(()) }
}

/// # Safety
/// `p` must be null or point to a live value of type `T`.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    non_null(p, what)?;
    Ok(unsafe { &*p })
}

fn to_cstring(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| Failure::new(IdemStatus::Numerical, "report contains NUL"))
}

macro_rules! json {
    ($v:expr) => {
        serde_json::to_string($v).map_err(|e| Failure::new(IdemStatus::Numerical, e.to_string()))
    };
}

fn optimizer(seed: u64, restarts: u32) -> OptimizerConfig {
    OptimizerConfig { restarts: restarts as usize, seed, ..OptimizerConfig::default() }
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[unsafe(no_mangle)]
pub extern "C" fn idem_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[unsafe(no_mangle)]
pub extern "C" fn idem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New `rows × cols` matrix from row-major real and imaginary parts. `im` may be null for a
/// real matrix.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `rows * cols` doubles; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_matrix_new(
    rows: usize,
    cols: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut IdemMatrix,
) -> IdemStatus {
    guard(|| {
        non_null(re, "re")?;
        non_null(out, "out")?;
        let n = rows.checked_mul(cols).ok_or_else(|| Failure::new(IdemStatus::InvalidArgument, "rows * cols overflows"))?;
        let re = unsafe { std::slice::from_raw_parts(re, n) };
        let im = if im.is_null() { None } else { Some(unsafe { std::slice::from_raw_parts(im, n) }) };
        let entries: Vec<C64> = (0..n).map(|i| C64::new(re[i], im.map_or(0.0, |v| v[i]))).collect();
        let m = ComplexMatrix::from_row_major(rows, cols, &entries)?;
        unsafe { *out = Box::into_raw(Box::new(IdemMatrix(m))) };
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`idem_matrix_new`] not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_matrix_free(m: *mut IdemMatrix) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// # Safety
/// `m` must be a live matrix handle; `rows` and `cols` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_matrix_dims(m: *const IdemMatrix, rows: *mut usize, cols: *mut usize) -> IdemStatus {
    guard(|| {
        let m = unsafe { borrow(m, "matrix") }?;
        non_null(rows, "rows")?;
        non_null(cols, "cols")?;
        unsafe {
            *rows = m.0.rows();
            *cols = m.0.cols();
        }
        Ok(())
    })
}

/// Divergence of two density matrices in bits; `+inf` is returned as `INFINITY`.
/// `param` is α for Petz and sandwiched, ε for hypothesis testing, and ignored otherwise.
///
/// # Safety
/// `rho` and `sigma` must be live matrix handles; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_divergence(
    rho: *const IdemMatrix,
    sigma: *const IdemMatrix,
    kind: u32,
    param: f64,
    out: *mut f64,
) -> IdemStatus {
    guard(|| {
        let rho = DensityMatrix::new(unsafe { borrow(rho, "rho") }?.0.clone())?;
        let sigma = DensityMatrix::new(unsafe { borrow(sigma, "sigma") }?.0.clone())?;
        non_null(out, "out")?;
        use IdemDivergenceKind as K;
        let value = match kind {
            k if k == K::Umegaki as u32 => Divergence::Umegaki.eval(&rho, &sigma)?,
            k if k == K::Petz as u32 => idem::states::petz_renyi(&rho, &sigma, param)?,
            k if k == K::Sandwiched as u32 => idem::states::sandwiched(&rho, &sigma, param)?,
            k if k == K::Dmax as u32 => Divergence::Dmax.eval(&rho, &sigma)?,
            k if k == K::Dmin as u32 => Divergence::Dmin.eval(&rho, &sigma)?,
            k if k == K::HypothesisTesting as u32 => hypothesis_testing(&rho, &sigma, param)?.value,
            k if k == K::Chernoff as u32 => chernoff(&rho, &sigma)?,
            other => return Err(Failure::new(IdemStatus::InvalidArgument, format!("unknown divergence kind {other}"))),
        };
        unsafe { *out = value };
        Ok(())
    })
}

/// Parses a channel (block, Choi or Kraus form) from NUL-terminated JSON.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_channel_from_json(text: *const c_char, out: *mut *mut IdemChannel) -> IdemStatus {
    guard(|| {
        non_null(text, "json")?;
        non_null(out, "out")?;
        let s = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| Failure::new(IdemStatus::Parse, "channel JSON is not UTF-8"))?;
        let ch = ChannelSpec::from_json(s)?.build()?;
        unsafe { *out = Box::into_raw(Box::new(IdemChannel(ch))) };
        Ok(())
    })
}

/// # Safety
/// `ch` must be null or a handle from [`idem_channel_from_json`] not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_channel_free(ch: *mut IdemChannel) {
    if !ch.is_null() {
        drop(unsafe { Box::from_raw(ch) });
    }
}

/// # Safety
/// `ch` must be a live channel handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_channel_dim(ch: *const IdemChannel, out: *mut usize) -> IdemStatus {
    guard(|| {
        let ch = unsafe { borrow(ch, "channel") }?;
        non_null(out, "out")?;
        unsafe { *out = ch.0.dim() };
        Ok(())
    })
}

/// `D(id‖Q)` in bits, or its stabilized version when `cb` is true.
///
/// # Safety
/// `q` must be a live channel handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_d_idq(q: *const IdemChannel, cb: bool, out: *mut f64) -> IdemStatus {
    guard(|| {
        let q = require_block(&unsafe { borrow(q, "channel") }?.0)?;
        non_null(out, "out")?;
        let v = if cb { d_idq_cb(&q)? } else { d_idq(&q)? };
        unsafe { *out = v };
        Ok(())
    })
}

/// Pimsner–Popa index of the conditional expectation `e` (linear scale), plain and stabilized.
///
/// # Safety
/// `e` must be a live channel handle; `c` and `c_cb` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_pimsner_popa(e: *const IdemChannel, c: *mut f64, c_cb: *mut f64) -> IdemStatus {
    guard(|| {
        let e = require_block(&unsafe { borrow(e, "channel") }?.0)?;
        non_null(c, "c")?;
        non_null(c_cb, "c_cb")?;
        let (plain, cb) = pimsner_popa(&e)?;
        unsafe {
            *c = plain;
            *c_cb = cb;
        }
        Ok(())
    })
}

/// Full pair analysis as JSON, the same report as the `formula` command without its meta
/// block. Free the string with [`idem_string_free`].
///
/// # Safety
/// `p` and `q` must be live channel handles; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_formula_json(
    p: *const IdemChannel,
    q: *const IdemChannel,
    alpha: f64,
    seed: u64,
    restarts: u32,
    out: *mut *mut c_char,
) -> IdemStatus {
    guard(|| {
        let (p, q) = (unsafe { borrow(p, "p") }?, unsafe { borrow(q, "q") }?);
        non_null(out, "out")?;
        let a = analyze_pair(&p.0, &q.0, alpha, &optimizer(seed, restarts))?;
        let s = to_cstring(json!(&a)?)?;
        unsafe { *out = s };
        Ok(())
    })
}

/// Built-in strict counterexample as JSON. With `restarts = 0` only the seeded oracle starts
/// run. Free the string with [`idem_string_free`].
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_counterexample_json(seed: u64, restarts: u32, out: *mut *mut c_char) -> IdemStatus {
    guard(|| {
        non_null(out, "out")?;
        let rep = counterexample::run(Some(&optimizer(seed, restarts)))?;
        let s = to_cstring(json!(&rep)?)?;
        unsafe { *out = s };
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn idem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
