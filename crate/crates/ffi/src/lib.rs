//! C ABI over `gtent`.
//!
//! Every fallible call returns a [`GtentStatus`]; on failure the message is
//! kept per thread and can be copied out with [`gtent_last_error`]. Objects
//! cross the boundary as opaque handles that the caller frees.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gtent::atomic::{atomic_decompose, verify_decomposition, DecomposeConfig, DecompositionReport};
use gtent::config::SessionConfig;
use gtent::geometry::{admissibility_radius, gaussian_measure_ball, AdmissibleBall, Point};
use gtent::grid::layer_cube_count;
use gtent::suites::{run_suite, sample_function, Session};
use gtent::tent::{t1q_norm, NormConfig, TentFunction};
use gtent::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtentStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    EmptyFamily = 3,
    ToleranceUnreachable = 4,
    NotWhitney = 5,
    Resolution = 6,
    GridMismatch = 7,
    Discretisation = 8,
    Config = 9,
    NullPointer = 10,
    Overflow = 11,
    Panic = 12,
}

impl From<&Error> for GtentStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => GtentStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => GtentStatus::DimensionMismatch,
            Error::EmptyFamily { .. } => GtentStatus::EmptyFamily,
            Error::ToleranceUnreachable { .. } => GtentStatus::ToleranceUnreachable,
            Error::NotWhitney { .. } => GtentStatus::NotWhitney,
            Error::Resolution(_) => GtentStatus::Resolution,
            Error::GridMismatch => GtentStatus::GridMismatch,
            Error::Discretisation(_) => GtentStatus::Discretisation,
            Error::Config(_) => GtentStatus::Config,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: GtentStatus, msg: impl Into<String>) -> GtentStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

/// Runs `body`, mapping library errors and panics to status codes.
fn guard(body: impl FnOnce() -> Result<(), GtentStatus>) -> GtentStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GtentStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(GtentStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> GtentStatus {
    fail(GtentStatus::from(&e), e.to_string())
}

fn null(name: &str) -> GtentStatus {
    fail(GtentStatus::NullPointer, format!("{name} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], GtentStatus> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, GtentStatus> {
    p.as_mut().ok_or_else(|| null(name))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gtent_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `m(x) = min(1, 1/|x|)`.
///
/// # Safety
/// `x` must point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn gtent_admissibility_radius(x: *const f64, n: usize, value: *mut f64) -> GtentStatus {
    guard(|| {
        let x = slice(x, n, "x")?;
        *out(value, "value")? = admissibility_radius(x);
        Ok(())
    })
}

/// Gaussian measure of `B(center, radius)` to absolute accuracy `tol`.
///
/// # Safety
/// `center` must point to `n` readable doubles; `value` and `abs_error`
/// must be writable (`abs_error` may be null).
#[no_mangle]
pub unsafe extern "C" fn gtent_ball_measure(
    center: *const f64,
    n: usize,
    radius: f64,
    tol: f64,
    value: *mut f64,
    abs_error: *mut f64,
) -> GtentStatus {
    guard(|| {
        let c = slice(center, n, "center")?.to_vec();
        let ball = AdmissibleBall::new(Point::new(c).map_err(lib)?, radius).map_err(lib)?;
        let est = gaussian_measure_ball(&ball, tol).map_err(lib)?;
        *out(value, "value")? = est.value;
        if let Some(e) = abs_error.as_mut() {
            *e = est.abs_error;
        }
        Ok(())
    })
}

/// Number of cubes in `Delta_{k,l}` in dimension `n`.
///
/// # Safety
/// `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_layer_cube_count(n: usize, k: c_int, l: u32, count: *mut u64) -> GtentStatus {
    guard(|| {
        let c = layer_cube_count(n, k, l).and_then(|c| u64::try_from(c).ok());
        *out(count, "count")? = c.ok_or_else(|| fail(GtentStatus::Overflow, "cube count exceeds 64 bits"))?;
        Ok(())
    })
}

/// Grid, calibration and tolerances shared by the calls below.
pub struct GtentSession(Session);

/// A function on the session grid.
pub struct GtentFunction(TentFunction);

/// An atomic decomposition with its verification report.
pub struct GtentDecomposition {
    terms: usize,
    sum_lambda: f64,
    report: DecompositionReport,
}

/// Creates a session from TOML text (null for the defaults).
///
/// # Safety
/// `toml` must be null or a NUL-terminated string; `session` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_session_new(toml: *const c_char, session: *mut *mut GtentSession) -> GtentStatus {
    guard(|| {
        let slot = out(session, "session")?;
        let cfg = if toml.is_null() {
            SessionConfig::default()
        } else {
            let text = CStr::from_ptr(toml).to_str().map_err(|_| fail(GtentStatus::Config, "config is not UTF-8"))?;
            SessionConfig::from_toml(text).map_err(lib)?
        };
        *slot = Box::into_raw(Box::new(GtentSession(Session::new(cfg).map_err(lib)?)));
        Ok(())
    })
}

/// # Safety
/// `session` must be null or a handle from [`gtent_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gtent_session_free(session: *mut GtentSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Number of active `(cell, level)` pairs of the session grid.
///
/// # Safety
/// `session` must be a live handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_session_active_len(session: *const GtentSession, len: *mut usize) -> GtentStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        *out(len, "len")? = s.0.grid.active_len();
        Ok(())
    })
}

/// Cell centre (`n` doubles written to `y`) and level of active pair `index`.
///
/// # Safety
/// `session` must be a live handle, `y` must have room for `n` doubles and
/// `t` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_session_pair(session: *const GtentSession, index: usize, y: *mut f64, t: *mut f64) -> GtentStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let grid = &s.0.grid;
        if index >= grid.active_len() {
            return Err(fail(GtentStatus::InvalidArgument, format!("pair {index} out of range")));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        let (j, level) = grid.split(index);
        let c = grid.center(j);
        ptr::copy_nonoverlapping(c.as_ptr(), y, c.len());
        *out(t, "t")? = grid.t_levels()[level];
        Ok(())
    })
}

/// A function from one value per active pair (`len` must equal the active length).
///
/// # Safety
/// `session` must be a live handle, `values` must point to `len` readable
/// doubles and `function` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_function_from_values(
    session: *const GtentSession,
    values: *const f64,
    len: usize,
    function: *mut *mut GtentFunction,
) -> GtentStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let grid = s.0.grid.clone();
        if len != grid.active_len() {
            return Err(fail(GtentStatus::DimensionMismatch, format!("expected {} values, got {len}", grid.active_len())));
        }
        let v = slice(values, len, "values")?;
        let f = TentFunction::from_entries(grid, v.iter().copied().enumerate()).map_err(lib)?;
        *out(function, "function")? = Box::into_raw(Box::new(GtentFunction(f)));
        Ok(())
    })
}

/// The seeded random test function of stream `stream`.
///
/// # Safety
/// `session` must be a live handle and `function` writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_function_sample(
    session: *const GtentSession,
    stream: u32,
    signed_values: bool,
    function: *mut *mut GtentFunction,
) -> GtentStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let f = sample_function(&s.0, stream, signed_values).map_err(lib)?;
        *out(function, "function")? = Box::into_raw(Box::new(GtentFunction(f)));
        Ok(())
    })
}

/// # Safety
/// `function` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gtent_function_free(function: *mut GtentFunction) {
    if !function.is_null() {
        drop(Box::from_raw(function));
    }
}

/// Discretised `T^{1,q}` norm at aperture `alpha`.
///
/// # Safety
/// `function` must be a live handle and `norm` writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_t1q_norm(function: *const GtentFunction, q: f64, alpha: f64, norm: *mut f64) -> GtentStatus {
    guard(|| {
        let f = function.as_ref().ok_or_else(|| null("function"))?;
        let cfg = NormConfig::new(q).map_err(lib)?;
        *out(norm, "norm")? = t1q_norm(&f.0, &cfg, alpha).map_err(lib)?;
        Ok(())
    })
}

/// Atomic decomposition with the session's `q`, `eta` and calibrated `eta_bar`.
///
/// # Safety
/// `session` and `function` must be live handles; `decomposition` writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_decompose(
    session: *const GtentSession,
    function: *const GtentFunction,
    decomposition: *mut *mut GtentDecomposition,
) -> GtentStatus {
    guard(|| {
        let s = &session.as_ref().ok_or_else(|| null("session"))?.0;
        let f = &function.as_ref().ok_or_else(|| null("function"))?.0;
        let mut norm = NormConfig::new(s.config.q).map_err(lib)?;
        norm.ball_tol = s.config.tolerances.ball;
        let mut cfg = DecomposeConfig::new(norm, s.config.eta, s.calibration.eta_bar);
        cfg.radii = s.config.radii;
        let d = atomic_decompose(f, &cfg).map_err(lib)?;
        let report = verify_decomposition(f, &d).map_err(lib)?;
        let handle = GtentDecomposition { terms: d.terms.len(), sum_lambda: d.sum_lambda, report };
        *out(decomposition, "decomposition")? = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `decomposition` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gtent_decomposition_free(decomposition: *mut GtentDecomposition) {
    if !decomposition.is_null() {
        drop(Box::from_raw(decomposition));
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GtentDecompositionSummary {
    pub terms: usize,
    pub sum_lambda: f64,
    pub norm: f64,
    pub reconstruction_error: f64,
    pub realized_alpha: f64,
    pub kappa_mu: f64,
    /// Nonzero when every structural check of the decomposition passed.
    pub checks_passed: c_int,
}

/// # Safety
/// `decomposition` must be a live handle and `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_decomposition_summary(
    decomposition: *const GtentDecomposition,
    tol: f64,
    summary: *mut GtentDecompositionSummary,
) -> GtentStatus {
    guard(|| {
        let d = decomposition.as_ref().ok_or_else(|| null("decomposition"))?;
        let r = &d.report;
        *out(summary, "summary")? = GtentDecompositionSummary {
            terms: d.terms,
            sum_lambda: d.sum_lambda,
            norm: r.norm,
            reconstruction_error: r.reconstruction_error,
            realized_alpha: r.realized_alpha,
            kappa_mu: r.kappa_mu,
            checks_passed: c_int::from(r.passed(tol)),
        };
        Ok(())
    })
}

/// Runs verification suite `id` (1 to 11); `passed` receives 0 or 1.
///
/// # Safety
/// `session` must be a live handle and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn gtent_run_suite(session: *const GtentSession, id: u32, passed: *mut c_int) -> GtentStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let report = run_suite(id, &s.0).map_err(lib)?;
        *out(passed, "passed")? = c_int::from(report.passed);
        Ok(())
    })
}
