//! C ABI over the `jetvar` toolkit.
//!
//! A `JvRun` handle owns a validated configuration and, after a march, its
//! nodal values. Every call returns a `JvStatus`; on failure the message is
//! available from `jv_last_error` until the next failing call on the same
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jetvar::config::RunConfig;
use jetvar::integrator::Run;
use jetvar::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    NotRun = 6,
    Unavailable = 7,
    Panic = 8,
}

/// Opaque run handle.
pub struct JvRun {
    config: RunConfig,
    run: Option<Run>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: JvStatus, message: impl Into<String>) -> JvStatus {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
    status
}

fn from_error(e: Error) -> JvStatus {
    let status = match e {
        Error::Config(_) | Error::Parse(_) | Error::Json(_) | Error::Io(_) => JvStatus::Config,
        Error::Dimension(_) | Error::Index(_) => JvStatus::InvalidArgument,
        _ => JvStatus::Numerical,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> JvStatus) -> JvStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(JvStatus::Panic, "internal panic"))
}

unsafe fn handle<'a>(h: *const JvRun) -> Result<&'a JvRun, JvStatus> {
    h.as_ref().ok_or_else(|| fail(JvStatus::NullPointer, "null run handle"))
}

fn marched(h: &JvRun) -> Result<&Run, JvStatus> {
    h.run.as_ref().ok_or_else(|| fail(JvStatus::NotRun, "no march has been run on this handle"))
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> JvStatus {
    if !written.is_null() {
        *written = src.len();
    }
    if src.len() > len {
        return fail(JvStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", src.len()));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return fail(JvStatus::NullPointer, "null output buffer");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    JvStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call.
#[no_mangle]
pub extern "C" fn jv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a JSON run configuration into a new handle stored in `*out`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jv_run_new(config_json: *const c_char, out: *mut *mut JvRun) -> JvStatus {
    guard(|| {
        if config_json.is_null() || out.is_null() {
            return fail(JvStatus::NullPointer, "null argument to jv_run_new");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(config_json).to_str() else {
            return fail(JvStatus::InvalidArgument, "configuration is not UTF-8");
        };
        match RunConfig::parse(text, &[]) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(JvRun { config, run: None }));
                JvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `h` must come from `jv_run_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jv_run_free(h: *mut JvRun) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Marches the configured problem; `doubled` also marches `v`.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jv_run_march(h: *mut JvRun, doubled: bool) -> JvStatus {
    guard(|| {
        let Some(h) = h.as_mut() else {
            return fail(JvStatus::NullPointer, "null run handle");
        };
        h.run = None;
        match h.config.march(doubled) {
            Ok(r) => {
                h.run = Some(r);
                JvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Stored rows, columns per row and fields per node of the last march.
///
/// # Safety
/// `h` must be a live handle; output pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn jv_run_shape(
    h: *const JvRun,
    rows: *mut usize,
    columns: *mut usize,
    fields: *mut usize,
) -> JvStatus {
    guard(|| {
        let r = match handle(h).and_then(marched) {
            Ok(r) => r,
            Err(s) => return s,
        };
        for (p, v) in [(rows, r.state.q_rows()), (columns, r.state.columns()), (fields, r.state.n)] {
            if !p.is_null() {
                *p = v;
            }
        }
        JvStatus::Ok
    })
}

/// Copies `q` (row-major `[row][column][field]`) into `buf`. `*written`
/// receives the required length even when the buffer is too small.
///
/// # Safety
/// `buf` must hold `len` doubles; `written` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn jv_run_copy_q(h: *const JvRun, buf: *mut f64, len: usize, written: *mut usize) -> JvStatus {
    guard(|| match handle(h).and_then(marched) {
        Ok(r) => copy_out(&r.state.q, buf, len, written),
        Err(s) => s,
    })
}

/// Copies `v` after a doubled march; `Unavailable` otherwise.
///
/// # Safety
/// As for `jv_run_copy_q`.
#[no_mangle]
pub unsafe extern "C" fn jv_run_copy_v(h: *const JvRun, buf: *mut f64, len: usize, written: *mut usize) -> JvStatus {
    guard(|| match handle(h).and_then(marched) {
        Ok(r) => match &r.state.v {
            Some(v) => copy_out(v, buf, len, written),
            None => fail(JvStatus::Unavailable, "the last march did not carry v"),
        },
        Err(s) => s,
    })
}

/// Final-row `L²` error against the closed-form solution.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jv_run_final_error(h: *const JvRun, out: *mut f64) -> JvStatus {
    guard(|| {
        let (h, r) = match handle(h).and_then(|h| marched(h).map(|r| (h, r))) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(JvStatus::NullPointer, "null output pointer");
        }
        match h.config.final_error(r) {
            Some(e) => {
                *out = e;
                JvStatus::Ok
            }
            None => fail(JvStatus::Unavailable, "no closed-form solution for this configuration"),
        }
    })
}

/// The configured residual of the initial-data sections at `(t, x)`.
///
/// # Safety
/// `buf` must hold `len` doubles; `written` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn jv_run_residual(
    h: *const JvRun,
    t: f64,
    x: f64,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> JvStatus {
    guard(|| {
        let h = match handle(h) {
            Ok(h) => h,
            Err(s) => return s,
        };
        match h.config.residual_at(&[t, x]) {
            Ok(r) => copy_out(&r, buf, len, written),
            Err(e) => from_error(e),
        }
    })
}

/// Runs every invariant suite; `*failed` receives the number of failures.
///
/// # Safety
/// `failed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jv_check(seed: u64, failed: *mut usize) -> JvStatus {
    guard(|| {
        if failed.is_null() {
            return fail(JvStatus::NullPointer, "null output pointer");
        }
        let out = jetvar::checks::run_all(seed);
        *failed = out.iter().filter(|o| !o.passed).count();
        JvStatus::Ok
    })
}
