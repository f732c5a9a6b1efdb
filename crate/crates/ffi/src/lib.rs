//! C ABI over the sparse-nls solver.
//!
//! Models, datasets and fit results are opaque heap handles released with their `*_free`
//! function. Every entry point returns an [`SnlsStatus`]; on failure the message is
//! available from [`snls_last_error`] on the same thread until the next call. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sparse_nls::selection::{self, SelectionConfig};
use sparse_nls::solver::{self, SolveResult, SolveStatus, SolverConfig};
use sparse_nls::{Dataset, DeviationVector, Error, ModelKind, NonlinearModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Input = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsSolveStatus {
    Converged = 0,
    MaxIterations = 1,
    Stalled = 2,
}

pub struct SnlsModel {
    inner: Box<dyn NonlinearModel>,
}

pub struct SnlsDataset {
    inner: Dataset,
}

pub struct SnlsResult {
    inner: SolveResult,
    selection_radius: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_for(e: &Error) -> SnlsStatus {
    match e {
        Error::Solver { .. }
        | Error::Subproblem { .. }
        | Error::AllStartsFailed(_)
        | Error::SelectionExhausted { .. }
        | Error::Study { .. } => SnlsStatus::Numerical,
        Error::Input { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Dataset(_) => SnlsStatus::Input,
        _ => SnlsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SnlsStatus, String)>) -> SnlsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnlsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SnlsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SnlsStatus, String) {
    (status_for(&e), e.to_string())
}

fn null(what: &str) -> (SnlsStatus, String) {
    (SnlsStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SnlsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SnlsStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (SnlsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SnlsStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (SnlsStatus, String)> {
    if len < src.len() {
        return Err((
            SnlsStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn snls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a bundled model: `"headneck"` or `"expsum<p>"`.
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snls_model_new(id: *const c_char, out: *mut *mut SnlsModel) -> SnlsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind: ModelKind = str_arg(id, "id")?.parse().map_err(lib_err)?;
        let inner = kind.build(None).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SnlsModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`snls_model_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn snls_model_free(model: *mut SnlsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of free parameters, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snls_model_num_params(model: *const SnlsModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.spec().dim())
}

/// Builds a uniformly sampled dataset from `n` inputs and observations.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snls_dataset_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    sample_rate: f64,
    out: *mut *mut SnlsDataset,
) -> SnlsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let x = slice_arg(x, n, "x")?.to_vec();
        let y = slice_arg(y, n, "y")?.to_vec();
        let inner = Dataset::uniform(x, y, sample_rate).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SnlsDataset { inner }));
        Ok(())
    })
}

/// Loads a `t,x,y` CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snls_dataset_load_csv(path: *const c_char, out: *mut *mut SnlsDataset) -> SnlsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = Dataset::load_csv(str_arg(path, "path")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SnlsDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snls_dataset_free(data: *mut SnlsDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snls_dataset_len(data: *const SnlsDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.len())
}

/// Fits from the typical values with L1 radius `radius` (use `INFINITY` for plain LM).
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn snls_fit(
    model: *const SnlsModel,
    data: *const SnlsDataset,
    radius: f64,
    out: *mut *mut SnlsResult,
) -> SnlsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let data = data.as_ref().ok_or_else(|| null("data"))?;
        let cfg = SolverConfig::with_radius(radius);
        let init = DeviationVector::zeros(model.inner.spec().dim());
        let inner = solver::fit(model.inner.as_ref(), &data.inner, &init, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SnlsResult {
            inner,
            selection_radius: radius,
        }));
        Ok(())
    })
}

/// Searches the radius leaving `n_star` parameters away from their typical values.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn snls_select(
    model: *const SnlsModel,
    data: *const SnlsDataset,
    n_star: usize,
    out: *mut *mut SnlsResult,
) -> SnlsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let data = data.as_ref().ok_or_else(|| null("data"))?;
        let sel = selection::select(
            model.inner.as_ref(),
            &data.inner,
            &SelectionConfig::new(n_star),
            &SolverConfig::default(),
        )
        .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SnlsResult {
            inner: sel.result,
            selection_radius: sel.radius,
        }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snls_result_free(result: *mut SnlsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Residual sum of squares, NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snls_result_sse(result: *const SnlsResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.sse)
}

/// Radius used by the fit (the selected radius for [`snls_select`]).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snls_result_radius(result: *const SnlsResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.selection_radius)
}

/// # Safety
/// `result` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn snls_result_status(result: *const SnlsResult, out: *mut SnlsSolveStatus) -> SnlsStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        *out_arg(out, "out")? = match r.inner.status {
            SolveStatus::Converged => SnlsSolveStatus::Converged,
            SolveStatus::MaxIterations => SnlsSolveStatus::MaxIterations,
            SolveStatus::Stalled => SnlsSolveStatus::Stalled,
        };
        Ok(())
    })
}

/// Copies the normalized deviations into `out[0..len]`.
///
/// # Safety
/// `result` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn snls_result_deviations(result: *const SnlsResult, out: *mut f64, len: usize) -> SnlsStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.inner.deviations, out, len)
    })
}

/// Copies the physical parameter values into `out[0..len]`.
///
/// # Safety
/// `result` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn snls_result_params(result: *const SnlsResult, out: *mut f64, len: usize) -> SnlsStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.inner.params, out, len)
    })
}
