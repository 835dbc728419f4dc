//! C ABI for `wiprates`.
//!
//! Systems and decompositions live behind opaque handles created by a
//! `*_new`/`wr_decompose` call and released by the matching `*_free`. Every
//! fallible function returns a status code (`WR_OK` on success) and writes
//! its results through out-pointers; on failure the message is available
//! from `wr_last_error_message` on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wiprates::dynamics::{BaseMap, FlowState, Roof, SuspensionSystem};
use wiprates::process::{center_observable, ObservableKind, ObservableSpec};
use wiprates::rates::{theoretical_rate, wn_cloud};
use wiprates::rng::{stream, Purpose};
use wiprates::transport::{omega, wasserstein_1d, wasserstein_assignment, EmpiricalMeasure, GridSup};
use wiprates::path::PathSample;
use wiprates::ulam::{self, Decomposition, GridLayout};
use wiprates::Error;

pub const WR_OK: i32 = 0;
/// Invalid argument, configuration or I/O failure.
pub const WR_ERR_INPUT: i32 = 1;
/// Non-convergence, truncation or a failed fit.
pub const WR_ERR_NUMERICAL: i32 = 2;
/// A problem size exceeded a solver cap.
pub const WR_ERR_SIZE: i32 = 3;
pub const WR_ERR_NULL: i32 = 4;
pub const WR_ERR_PANIC: i32 = 5;

pub const WR_MAP_DOUBLING: i32 = 0;
pub const WR_MAP_LSV: i32 = 1;
pub const WR_MAP_INDUCED: i32 = 2;

pub const WR_ROOF_CONSTANT: i32 = 0;
pub const WR_ROOF_ONE_PLUS_Y: i32 = 1;

pub const WR_FIELD_PSI: i32 = 0;
pub const WR_FIELD_M: i32 = 1;
pub const WR_FIELD_CHI: i32 = 2;
pub const WR_FIELD_BREVE_W: i32 = 3;
pub const WR_FIELD_DENSITY: i32 = 4;

/// A suspension flow over one of the supported base maps.
pub struct WrSystem {
    inner: SuspensionSystem,
}

/// Result of a martingale-coboundary decomposition on an Ulam grid.
pub struct WrDecomposition {
    inner: Decomposition,
    density: Vec<f64>,
}

/// `L¹(μ)` diagnostics of a decomposition.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WrResiduals {
    pub reconstruction: f64,
    pub kernel: f64,
    pub breve_mean: f64,
    pub series: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Config(_) | Error::Io(_) => WR_ERR_INPUT,
        Error::Size { .. } => WR_ERR_SIZE,
        _ => WR_ERR_NUMERICAL,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WR_OK,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("{name} is null"));
            WR_ERR_NULL
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(msg);
            WR_ERR_INPUT
        }
        Err(_) => {
            set_last_error("internal panic".into());
            WR_ERR_PANIC
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller promises `p` is null or valid for reads.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller promises `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(name))
}

fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and, by contract, valid for `len` reads.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn slice_mut<'a>(p: *mut f64, len: usize, name: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and, by contract, valid for `len` writes.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn observable(name: *const c_char) -> Result<ObservableSpec, Failure> {
    if name.is_null() {
        return Err(Failure::Null("observable"));
    }
    // SAFETY: non-null and, by contract, NUL-terminated.
    let s = unsafe { CStr::from_ptr(name) }.to_str().map_err(|_| Failure::Arg("observable name is not UTF-8".into()))?;
    Ok(ObservableSpec::new(ObservableKind::parse(s)?))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Creates a system. `beta` is ignored for the doubling map and
/// `roof_height` for the `1 + y` roof.
#[no_mangle]
pub extern "C" fn wr_system_new(map: i32, beta: f64, roof: i32, roof_height: f64, out_system: *mut *mut WrSystem) -> i32 {
    guard(|| {
        let slot = out(out_system, "out_system")?;
        let base = match map {
            WR_MAP_DOUBLING => BaseMap::Doubling,
            WR_MAP_LSV => BaseMap::lsv(beta)?,
            WR_MAP_INDUCED => BaseMap::induced(beta)?,
            other => return Err(Failure::Arg(format!("unknown map {other}"))),
        };
        let roof = match roof {
            WR_ROOF_CONSTANT => Roof::constant(roof_height)?,
            WR_ROOF_ONE_PLUS_Y => Roof::OnePlusY,
            other => return Err(Failure::Arg(format!("unknown roof {other}"))),
        };
        *slot = Box::into_raw(Box::new(WrSystem { inner: SuspensionSystem::new(base, roof) }));
        Ok(())
    })
}

/// Releases a system; null is ignored.
///
/// # Safety
/// `system` must come from `wr_system_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wr_system_free(system: *mut WrSystem) {
    if !system.is_null() {
        drop(unsafe { Box::from_raw(system) });
    }
}

/// One step of the base map.
#[no_mangle]
pub extern "C" fn wr_system_step(system: *const WrSystem, y: f64, out_y: *mut f64) -> i32 {
    guard(|| {
        let s = non_null(system, "system")?;
        *out(out_y, "out_y")? = s.inner.base().apply(y)?;
        Ok(())
    })
}

/// Flows the state `(y, u)` forward for time `t`.
#[no_mangle]
pub extern "C" fn wr_system_evolve(system: *const WrSystem, y: f64, u: f64, t: f64, out_y: *mut f64, out_u: *mut f64) -> i32 {
    guard(|| {
        let s = non_null(system, "system")?;
        let state = s.inner.evolve(FlowState::new(y, u), t)?;
        *out(out_y, "out_y")? = state.y;
        *out(out_u, "out_u")? = state.u;
        Ok(())
    })
}

/// Samples `samples` paths of `W_n` on the grid `k/m`, row-major into
/// `out_values` (`samples * (m + 1)` values). A positive
/// `centering_budget` first subtracts a Birkhoff-average mean over that
/// much flow time; zero uses the observable as given.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn wr_wn_paths(
    system: *const WrSystem,
    observable_name: *const c_char,
    n: u64,
    m: usize,
    samples: usize,
    seed: u64,
    centering_budget: u64,
    out_values: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let s = non_null(system, "system")?;
        let mut v = observable(observable_name)?;
        if out_len != samples.saturating_mul(m + 1) {
            return Err(Failure::Arg(format!("out_len must be samples * (m + 1) = {}", samples * (m + 1))));
        }
        let dest = slice_mut(out_values, out_len, "out_values")?;
        if centering_budget > 0 {
            let mut rng = stream(seed, Purpose::Centering, 0, 0);
            v = center_observable(&v, &s.inner, centering_budget, &mut rng)?;
        } else {
            v = v.with_analytic_mean(0.0);
        }
        let paths = wn_cloud(&s.inner, &v, n, samples, m, seed, wiprates::dynamics::DEFAULT_BURN_IN)?;
        for (row, p) in dest.chunks_mut(m + 1).zip(&paths) {
            row.copy_from_slice(p.values());
        }
        Ok(())
    })
}

fn path_cloud(values: &[f64], points: usize) -> Result<Vec<PathSample>, Failure> {
    values.chunks(points).map(|c| PathSample::from_values(c).map_err(Failure::from)).collect()
}

/// Exact `𝒲_q` between two clouds of `count` paths with `points` values
/// each (row-major), under the sup distance on the grid.
#[no_mangle]
pub extern "C" fn wr_wasserstein_paths(
    a: *const f64,
    b: *const f64,
    count: usize,
    points: usize,
    q: f64,
    out_distance: *mut f64,
) -> i32 {
    guard(|| {
        if points < 2 || count == 0 {
            return Err(Failure::Arg("need at least one path of at least two points".into()));
        }
        let len = count.checked_mul(points).ok_or_else(|| Failure::Arg("size overflow".into()))?;
        let pa = path_cloud(slice(a, len, "a")?, points)?;
        let pb = path_cloud(slice(b, len, "b")?, points)?;
        let r = wasserstein_assignment(&EmpiricalMeasure::new(pa)?, &EmpiricalMeasure::new(pb)?, q, &GridSup)?;
        *out(out_distance, "out_distance")? = r.distance;
        Ok(())
    })
}

/// Exact `𝒲_q` between two equal-size samples on the line.
#[no_mangle]
pub extern "C" fn wr_wasserstein_1d(a: *const f64, b: *const f64, count: usize, q: f64, out_distance: *mut f64) -> i32 {
    guard(|| {
        let ma = EmpiricalMeasure::new(slice(a, count, "a")?.to_vec())?;
        let mb = EmpiricalMeasure::new(slice(b, count, "b")?.to_vec())?;
        *out(out_distance, "out_distance")? = wasserstein_1d(&ma, &mb, q)?.distance;
        Ok(())
    })
}

/// The modulus `ω_q(t)`.
#[no_mangle]
pub extern "C" fn wr_omega(q: f64, t: f64, out_value: *mut f64) -> i32 {
    guard(|| {
        *out(out_value, "out_value")? = omega(q, t)?;
        Ok(())
    })
}

/// The predicted rate at horizon `n` for moment order `p`.
#[no_mangle]
pub extern "C" fn wr_theoretical_rate(p: f64, n: f64, out_value: *mut f64) -> i32 {
    guard(|| {
        *out(out_value, "out_value")? = theoretical_rate(p, n)?;
        Ok(())
    })
}

/// Decomposes the excursion integral of the observable on `cells` Ulam cells.
#[no_mangle]
pub extern "C" fn wr_decompose(
    system: *const WrSystem,
    observable_name: *const c_char,
    cells: usize,
    series_tol: f64,
    out_decomposition: *mut *mut WrDecomposition,
) -> i32 {
    guard(|| {
        let s = non_null(system, "system")?;
        let v = observable(observable_name)?;
        let slot = out(out_decomposition, "out_decomposition")?;
        let transfer = ulam::Transfer::new(ulam::build_ulam(s.inner.base(), cells)?, 1e-13)?;
        let psi = ulam::observable_on_grid(&s.inner, &v, &transfer, GridLayout::Base)?;
        let inner = ulam::solve_coboundary(&psi, &transfer, series_tol, ulam::DEFAULT_MAX_TERMS)?;
        let density = transfer.density().values().to_vec();
        *slot = Box::into_raw(Box::new(WrDecomposition { inner, density }));
        Ok(())
    })
}

/// Releases a decomposition; null is ignored.
///
/// # Safety
/// `decomposition` must come from `wr_decompose` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wr_decomposition_free(decomposition: *mut WrDecomposition) {
    if !decomposition.is_null() {
        drop(unsafe { Box::from_raw(decomposition) });
    }
}

/// Number of grid values per field; 0 for null.
#[no_mangle]
pub extern "C" fn wr_decomposition_len(decomposition: *const WrDecomposition) -> usize {
    // SAFETY: null or a live handle, by contract.
    unsafe { decomposition.as_ref() }.map_or(0, |d| d.inner.psi.len())
}

#[no_mangle]
pub extern "C" fn wr_decomposition_sigma2(decomposition: *const WrDecomposition, out_sigma2: *mut f64) -> i32 {
    guard(|| {
        *out(out_sigma2, "out_sigma2")? = non_null(decomposition, "decomposition")?.inner.sigma2;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn wr_decomposition_residuals(decomposition: *const WrDecomposition, out_residuals: *mut WrResiduals) -> i32 {
    guard(|| {
        let r = non_null(decomposition, "decomposition")?.inner.residuals;
        *out(out_residuals, "out_residuals")? = WrResiduals {
            reconstruction: r.reconstruction,
            kernel: r.kernel,
            breve_mean: r.breve_mean,
            series: r.series,
        };
        Ok(())
    })
}

/// Copies one `WR_FIELD_*` grid function into `out_values`, which must
/// hold exactly `wr_decomposition_len` values.
#[no_mangle]
pub extern "C" fn wr_decomposition_field(
    decomposition: *const WrDecomposition,
    field: i32,
    out_values: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let d = non_null(decomposition, "decomposition")?;
        let src = match field {
            WR_FIELD_PSI => d.inner.psi.values(),
            WR_FIELD_M => d.inner.m.values(),
            WR_FIELD_CHI => d.inner.chi.values(),
            WR_FIELD_BREVE_W => d.inner.breve_w.values(),
            WR_FIELD_DENSITY => &d.density,
            other => return Err(Failure::Arg(format!("unknown field {other}"))),
        };
        if out_len != src.len() {
            return Err(Failure::Arg(format!("out_len must be {}", src.len())));
        }
        slice_mut(out_values, out_len, "out_values")?.copy_from_slice(src);
        Ok(())
    })
}
