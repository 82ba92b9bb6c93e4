//! C ABI for the `aqkd` simulator.
//!
//! Handles are opaque pointers created and released by this library. Every
//! fallible function returns an [`AqkdStatus`]; on failure a message is kept
//! per thread and can be read with [`aqkd_last_error`]. Strings passed in must
//! be NUL-terminated UTF-8. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use aqkd::harness::config::{load_config, ConfigFile, Entry};
use aqkd::harness::presets::{figure3, stretch};
use aqkd::harness::{best_point, emit_csv, max_range, run_sweep, CurveResult, SweepSpec};
use aqkd::keyrate::{binary_entropy, secret_fraction, takeoka_bound};
use aqkd::session::with_workers;
use aqkd::{Error, PhotonDistribution, YieldPoint};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AqkdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// Sweep description: lengths, curves, link parameters and pulse budget.
pub struct AqkdSpec {
    inner: SweepSpec,
}

/// Results of a sweep, one curve per configured curve.
pub struct AqkdResults {
    curves: Vec<CurveResult>,
    labels: Vec<CString>,
}

/// One operating point. Mirrors the CSV columns plus sample size and error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AqkdYieldPoint {
    pub length_km: f64,
    pub gain: f64,
    pub mu: f64,
    pub rounds: u32,
    pub pulses: u64,
    pub sift_yield: f64,
    pub sifted_ber: f64,
    pub distilled_yield: f64,
    pub distilled_ber: f64,
    pub eve_ambiguous: f64,
    pub eve_ber: f64,
    pub secret_fraction: f64,
    pub secret_yield: f64,
    pub secret_yield_stderr: f64,
    pub takeoka_bound: f64,
}

impl From<&YieldPoint> for AqkdYieldPoint {
    fn from(p: &YieldPoint) -> Self {
        Self {
            length_km: p.length_km,
            gain: p.gain,
            mu: p.mu,
            rounds: p.rounds,
            pulses: p.pulses,
            sift_yield: p.sift_yield,
            sifted_ber: p.sifted_ber,
            distilled_yield: p.distilled_yield,
            distilled_ber: p.distilled_ber,
            eve_ambiguous: p.eve_ambiguous,
            eve_ber: p.eve_ber,
            secret_fraction: p.secret_fraction,
            secret_yield: p.secret_yield,
            secret_yield_stderr: p.secret_yield_stderr,
            takeoka_bound: p.takeoka_bound,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("NUL removed"));
}

fn status_of(e: &Error) -> AqkdStatus {
    match e {
        Error::Config { .. } => AqkdStatus::Config,
        Error::Io { .. } => AqkdStatus::Io,
        _ => AqkdStatus::InvalidArgument,
    }
}

fn fail(status: AqkdStatus, msg: impl Into<String>) -> AqkdStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), AqkdStatus>) -> AqkdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AqkdStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(AqkdStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn lift<T>(r: aqkd::Result<T>) -> Result<T, AqkdStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, AqkdStatus> {
    if p.is_null() {
        return Err(fail(AqkdStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            AqkdStatus::InvalidArgument,
            format!("`{name}` is not UTF-8"),
        )
    })
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, AqkdStatus> {
    p.as_ref()
        .ok_or_else(|| fail(AqkdStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, AqkdStatus> {
    p.as_mut()
        .ok_or_else(|| fail(AqkdStatus::NullPointer, format!("`{name}` is null")))
}

fn new_spec(spec: SweepSpec) -> *mut AqkdSpec {
    Box::into_raw(Box::new(AqkdSpec { inner: spec }))
}

/// Version string of the library, statically allocated.
#[no_mangle]
pub extern "C" fn aqkd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn aqkd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// A default single-curve spec (plain source, length 0 km, calibrated link).
#[no_mangle]
pub extern "C" fn aqkd_spec_new() -> *mut AqkdSpec {
    new_spec(SweepSpec::default())
}

/// The four-curve comparison preset.
#[no_mangle]
pub extern "C" fn aqkd_spec_figure3(seed: u64) -> *mut AqkdSpec {
    new_spec(figure3(seed))
}

/// The superconducting-detector long-range preset.
#[no_mangle]
pub extern "C" fn aqkd_spec_stretch(seed: u64) -> *mut AqkdSpec {
    new_spec(stretch(seed))
}

/// # Safety
/// `spec` must be null or a handle from `aqkd_spec_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aqkd_spec_free(spec: *mut AqkdSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Sets one key using the config-file / CLI flag name, e.g. `"p-dark"`.
/// Curve keys (`G`, `chi`, `mu`, `rounds`) apply to every curve.
///
/// # Safety
/// `spec` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn aqkd_spec_set(
    spec: *mut AqkdSpec,
    key: *const c_char,
    value: *const c_char,
) -> AqkdStatus {
    guard(|| {
        let spec = out_arg(spec, "spec")?;
        let entry = Entry {
            key: str_arg(key, "key")?.to_string(),
            value: str_arg(value, "value")?.to_string(),
            line: 0,
        };
        let mut next = spec.inner.clone();
        lift(next.apply(&ConfigFile::default(), &[entry]))?;
        spec.inner = next;
        Ok(())
    })
}

/// Applies a config file on top of the spec.
///
/// # Safety
/// `spec` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aqkd_spec_load(spec: *mut AqkdSpec, path: *const c_char) -> AqkdStatus {
    guard(|| {
        let spec = out_arg(spec, "spec")?;
        let file = lift(load_config(Path::new(str_arg(path, "path")?)))?;
        let mut next = spec.inner.clone();
        lift(next.apply(&file, &[]))?;
        spec.inner = next;
        Ok(())
    })
}

/// Checks the spec without running it.
///
/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqkd_spec_validate(spec: *const AqkdSpec) -> AqkdStatus {
    guard(|| lift(handle(spec, "spec")?.inner.validate()))
}

/// Best point of the first curve at the first length.
///
/// # Safety
/// `spec` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aqkd_run_point(
    spec: *const AqkdSpec,
    out: *mut AqkdYieldPoint,
) -> AqkdStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.inner;
        let out = out_arg(out, "out")?;
        lift(s.validate())?;
        let p = lift(with_workers(s.workers, || {
            best_point(&s.link, &s.curves[0], s.lengths_km[0], s.budget, s.seed)
        }))?;
        *out = AqkdYieldPoint::from(&p);
        Ok(())
    })
}

/// Runs the full sweep. On success `*out` owns a results handle.
///
/// # Safety
/// `spec` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aqkd_run_sweep(
    spec: *const AqkdSpec,
    out: *mut *mut AqkdResults,
) -> AqkdStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.inner;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let curves = lift(run_sweep(s))?;
        let labels = curves
            .iter()
            .map(|c| CString::new(c.label.replace('\0', " ")).expect("NUL removed"))
            .collect();
        *out = Box::into_raw(Box::new(AqkdResults { curves, labels }));
        Ok(())
    })
}

/// # Safety
/// `results` must be null or a handle from `aqkd_run_sweep` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aqkd_results_free(results: *mut AqkdResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Number of curves; 0 for a null handle.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqkd_results_curve_count(results: *const AqkdResults) -> usize {
    results.as_ref().map_or(0, |r| r.curves.len())
}

/// Label of curve `curve`, or null when out of range. Owned by the handle.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqkd_results_curve_label(
    results: *const AqkdResults,
    curve: usize,
) -> *const c_char {
    results
        .as_ref()
        .and_then(|r| r.labels.get(curve))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Number of points of curve `curve`; 0 when out of range.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqkd_results_point_count(
    results: *const AqkdResults,
    curve: usize,
) -> usize {
    results
        .as_ref()
        .and_then(|r| r.curves.get(curve))
        .map_or(0, |c| c.points.len())
}

unsafe fn curve_of<'a>(
    results: *const AqkdResults,
    curve: usize,
) -> Result<&'a CurveResult, AqkdStatus> {
    let r = handle(results, "results")?;
    r.curves.get(curve).ok_or_else(|| {
        fail(
            AqkdStatus::OutOfRange,
            format!("curve {curve} of {}", r.curves.len()),
        )
    })
}

/// # Safety
/// `results` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aqkd_results_point(
    results: *const AqkdResults,
    curve: usize,
    index: usize,
    out: *mut AqkdYieldPoint,
) -> AqkdStatus {
    guard(|| {
        let c = curve_of(results, curve)?;
        let out = out_arg(out, "out")?;
        let p = c.points.get(index).ok_or_else(|| {
            fail(
                AqkdStatus::OutOfRange,
                format!("point {index} of {}", c.points.len()),
            )
        })?;
        *out = AqkdYieldPoint::from(p);
        Ok(())
    })
}

/// Maximum range of a curve at the given yield floor.
///
/// # Safety
/// `results` must be a live handle; `out_km` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aqkd_results_max_range(
    results: *const AqkdResults,
    curve: usize,
    floor: f64,
    out_km: *mut f64,
) -> AqkdStatus {
    guard(|| {
        let c = curve_of(results, curve)?;
        let out = out_arg(out_km, "out_km")?;
        if floor.is_nan() || floor <= 0.0 {
            return Err(fail(AqkdStatus::InvalidArgument, "floor must be > 0"));
        }
        *out = max_range(c, floor);
        Ok(())
    })
}

/// Writes the results as CSV.
///
/// # Safety
/// `results` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aqkd_results_write_csv(
    results: *const AqkdResults,
    path: *const c_char,
) -> AqkdStatus {
    guard(|| {
        let r = handle(results, "results")?;
        lift(emit_csv(&r.curves, Path::new(str_arg(path, "path")?)))
    })
}

/// Capacity bound of a lossy channel with transmittance `eta` in `[0, 1)`.
///
/// # Safety
/// `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aqkd_takeoka_bound(eta: f64, out: *mut f64) -> AqkdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = lift(takeoka_bound(eta))?;
        Ok(())
    })
}

/// Binary entropy in bits; arguments outside `(0, 1)` give 0.
#[no_mangle]
pub extern "C" fn aqkd_binary_entropy(p: f64) -> f64 {
    binary_entropy(p)
}

/// One-way secret fraction, clamped to `[0, 1]`.
#[no_mangle]
pub extern "C" fn aqkd_secret_fraction(
    bob_ber: f64,
    eve_ambiguous: f64,
    eve_ber: f64,
    f_ec: f64,
) -> f64 {
    secret_fraction(bob_ber, eve_ambiguous, eve_ber, f_ec)
}

/// Probability of `n` photons in an amplified coherent pulse with mean
/// signal photons `signal` and mean noise photons `noise`.
///
/// # Safety
/// `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aqkd_photon_pmf(
    signal: f64,
    noise: f64,
    n: u64,
    out: *mut f64,
) -> AqkdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = lift(PhotonDistribution::laguerre_gauss(signal, noise))?.pmf(n);
        Ok(())
    })
}
