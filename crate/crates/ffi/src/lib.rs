//! C ABI over `skewdyn`.
//!
//! Every function returns a [`SkewdynStatus`]; on failure the message is
//! available from [`skewdyn_last_error_message`] on the same thread. Handles
//! are opaque and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use skewdyn::analysis::{classify, stable_root, Verdict};
use skewdyn::dynsys::{apply_psi, apply_psi_inv, orbit, Orbit, Params, Point3, StopPolicy};
use skewdyn::green::green_plus;
use skewdyn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewdynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    Domain = 3,
    BranchUndefined = 4,
    NoConvergence = 5,
    OutOfRange = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewdynVerdict {
    ConvergesToFixedPoint = 0,
    FibonacciEscape = 1,
    MaximalEscape = 2,
    Undetermined = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SkewdynComplex {
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SkewdynPoint {
    pub z0: SkewdynComplex,
    pub z1: SkewdynComplex,
    pub z2: SkewdynComplex,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SkewdynGreen {
    pub value: f64,
    pub error_bound: f64,
    pub n_used: usize,
    pub escaped: bool,
}

/// Opaque parameter set `(q, d, alpha)`.
pub struct SkewdynParams(Params);

/// Opaque orbit.
pub struct SkewdynOrbit(Orbit);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SkewdynStatus {
    match e {
        Error::InvalidParams(_) | Error::InvalidSpec(_) | Error::Config(_) => SkewdynStatus::InvalidParams,
        Error::Domain(_) => SkewdynStatus::Domain,
        Error::BranchUndefined { .. } => SkewdynStatus::BranchUndefined,
        Error::NoConvergence(_) => SkewdynStatus::NoConvergence,
        _ => SkewdynStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SkewdynStatus, String)>) -> SkewdynStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkewdynStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            SkewdynStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (SkewdynStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SkewdynStatus, String) {
    (SkewdynStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or valid for reads.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SkewdynStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for writes.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), (SkewdynStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn to_c(z: Complex64) -> SkewdynComplex {
    SkewdynComplex { re: z.re, im: z.im }
}

fn from_c(z: SkewdynComplex) -> Complex64 {
    Complex64::new(z.re, z.im)
}

fn to_point(p: &SkewdynPoint) -> Point3 {
    Point3::new(from_c(p.z0), from_c(p.z1), from_c(p.z2))
}

fn from_point(p: &Point3) -> SkewdynPoint {
    let z = p.to_complex();
    SkewdynPoint {
        z0: to_c(z[0]),
        z1: to_c(z[1]),
        z2: to_c(z[2]),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn skewdyn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a parameter handle.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_params_new(
    q: u32,
    d: u32,
    alpha: SkewdynComplex,
    out: *mut *mut SkewdynParams,
) -> SkewdynStatus {
    guard(|| {
        let params = Params::new(q, d, from_c(alpha)).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(SkewdynParams(params))), "out")
    })
}

/// # Safety
/// `params` must be null or come from [`skewdyn_params_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_params_free(params: *mut SkewdynParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// `Psi_alpha(p)`, or its inverse when `inverse` is set. Values beyond double
/// range saturate.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_psi(
    params: *const SkewdynParams,
    p: *const SkewdynPoint,
    inverse: bool,
    out: *mut SkewdynPoint,
) -> SkewdynStatus {
    guard(|| {
        let params = &get(params, "params")?.0;
        let p = to_point(get(p, "point")?);
        let img = if inverse { apply_psi_inv(params, &p) } else { apply_psi(params, &p) };
        put(out, from_point(&img), "out")
    })
}

/// Orbit of `p` for up to `max_steps` steps without escape stopping.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_orbit_new(
    params: *const SkewdynParams,
    p: *const SkewdynPoint,
    max_steps: usize,
    out: *mut *mut SkewdynOrbit,
) -> SkewdynStatus {
    guard(|| {
        let params = &get(params, "params")?.0;
        let p = to_point(get(p, "point")?);
        let orb = orbit(params, &p, max_steps, StopPolicy::no_escape());
        put(out, Box::into_raw(Box::new(SkewdynOrbit(orb))), "out")
    })
}

/// Number of records (`n = 0..len`); 0 for a null handle.
///
/// # Safety
/// `orbit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_orbit_len(orbit: *const SkewdynOrbit) -> usize {
    orbit.as_ref().map_or(0, |o| o.0.records.len())
}

/// Point and `ln max(|P^(n)|, |P^(n-1)|)` of record `n`.
///
/// # Safety
/// Pointers must be valid; `point` and `log_mag` may each be null.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_orbit_get(
    orbit: *const SkewdynOrbit,
    n: usize,
    point: *mut SkewdynPoint,
    log_mag: *mut f64,
) -> SkewdynStatus {
    guard(|| {
        let orb = &get(orbit, "orbit")?.0;
        let r = orb.records.get(n).ok_or_else(|| {
            (SkewdynStatus::OutOfRange, format!("record {n} of {}", orb.records.len()))
        })?;
        if !point.is_null() {
            point.write(from_point(&r.point));
        }
        if !log_mag.is_null() {
            log_mag.write(r.log_mag.value());
        }
        Ok(())
    })
}

/// # Safety
/// `orbit` must be null or come from [`skewdyn_orbit_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_orbit_free(orbit: *mut SkewdynOrbit) {
    if !orbit.is_null() {
        drop(Box::from_raw(orbit));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_classify(
    params: *const SkewdynParams,
    p: *const SkewdynPoint,
    budget: usize,
    out: *mut SkewdynVerdict,
) -> SkewdynStatus {
    guard(|| {
        let params = &get(params, "params")?.0;
        let p = to_point(get(p, "point")?);
        let v = match classify(params, &p, budget).verdict {
            Verdict::ConvergesToFixedPoint => SkewdynVerdict::ConvergesToFixedPoint,
            Verdict::FibonacciEscape => SkewdynVerdict::FibonacciEscape,
            Verdict::MaximalEscape => SkewdynVerdict::MaximalEscape,
            Verdict::Undetermined => SkewdynVerdict::Undetermined,
        };
        put(out, v, "out")
    })
}

/// `G+` at `p` with an error bound at most `target_error` where reachable.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_green_plus(
    params: *const SkewdynParams,
    p: *const SkewdynPoint,
    target_error: f64,
    out: *mut SkewdynGreen,
) -> SkewdynStatus {
    guard(|| {
        let params = &get(params, "params")?.0;
        let p = to_point(get(p, "point")?);
        if !(target_error > 0.0) {
            return Err((SkewdynStatus::InvalidParams, format!("target_error {target_error}")));
        }
        let g = green_plus(params, &p, target_error);
        put(
            out,
            SkewdynGreen {
                value: g.value,
                error_bound: g.error_bound,
                n_used: g.n_used,
                escaped: g.escaped,
            },
            "out",
        )
    })
}

/// `p0` with `(p0, p1, p2)` on the stable manifold of the origin.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn skewdyn_stable_root(
    params: *const SkewdynParams,
    p1: SkewdynComplex,
    p2: SkewdynComplex,
    out: *mut SkewdynComplex,
) -> SkewdynStatus {
    guard(|| {
        let params = &get(params, "params")?.0;
        let r = stable_root(params, from_c(p1), from_c(p2), None).map_err(lib_err)?;
        put(out, to_c(r.p0), "out")
    })
}
