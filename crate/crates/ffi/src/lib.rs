//! C ABI over the `fastbp` engine.
//!
//! Models are opaque handles created by `fbp_model_parse` or
//! `fbp_model_stereo` and released with `fbp_model_free`. Every fallible
//! call returns an `FbpStatus`; on failure `fbp_last_error` describes the
//! most recent error on the calling thread. Kernel and domain selectors are
//! passed as `uint32_t` holding an `FbpKernel` or `FbpDomain` value.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fastbp::bp::{compute_beliefs, labels, run_sweeps, Domain, Kernel, SweepSchedule};
use fastbp::imageio::GrayImage;
use fastbp::mrf::text::parse_model;
use fastbp::oracle::enumerate_exact;
use fastbp::stereo::{build_stereo_mrf, StereoParams};
use fastbp::MrfModel;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ModelError = 4,
    InferenceError = 5,
    TooLarge = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbpKernel {
    Standard = 0,
    Fast = 1,
    Pruned = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbpDomain {
    SumProduct = 0,
    MaxSum = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbpStereoParams {
    pub num_disparities: usize,
    pub alpha: f64,
    pub t_b: f64,
    pub beta: f64,
    pub t_u: f64,
    pub sweeps: usize,
}

/// Opaque model handle.
pub struct FbpModel {
    inner: MrfModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl std::fmt::Display) {
    let s = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn fail(status: FbpStatus, msg: impl std::fmt::Display) -> FbpStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> FbpStatus) -> FbpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(FbpStatus::Panic, "internal panic"))
}

fn kernel_from(v: u32) -> Option<Kernel> {
    match v {
        0 => Some(Kernel::Standard),
        1 => Some(Kernel::Fast),
        2 => Some(Kernel::Pruned),
        _ => None,
    }
}

fn domain_from(v: u32) -> Option<Domain> {
    match v {
        0 => Some(Domain::SumProduct),
        1 => Some(Domain::MaxSum),
        _ => None,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fbp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default stereo parameters.
#[no_mangle]
pub extern "C" fn fbp_stereo_default_params() -> FbpStereoParams {
    let p = StereoParams::default();
    FbpStereoParams {
        num_disparities: p.num_disparities,
        alpha: p.alpha,
        t_b: p.t_b,
        beta: p.beta,
        t_u: p.t_u,
        sweeps: p.sweeps,
    }
}

/// Parses a model in the plain-text MRF format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbp_model_parse(
    text: *const c_char,
    out: *mut *mut FbpModel,
) -> FbpStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(FbpStatus::NullPointer, "null argument");
        }
        let Ok(s) = CStr::from_ptr(text).to_str() else {
            return fail(FbpStatus::ParseError, "model text is not UTF-8");
        };
        match parse_model(s) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FbpModel { inner }));
                FbpStatus::Ok
            }
            Err(e) => fail(FbpStatus::ParseError, e),
        }
    })
}

/// Builds the stereo grid model from two row-major 8-bit images of
/// `height * width` pixels each.
///
/// # Safety
/// `left` and `right` must point to `height * width` bytes; `params` and
/// `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fbp_model_stereo(
    left: *const u8,
    right: *const u8,
    height: usize,
    width: usize,
    params: *const FbpStereoParams,
    out: *mut *mut FbpModel,
) -> FbpStatus {
    guard(|| {
        if left.is_null() || right.is_null() || params.is_null() || out.is_null() {
            return fail(FbpStatus::NullPointer, "null argument");
        }
        let Some(n) = height.checked_mul(width) else {
            return fail(FbpStatus::InvalidArgument, "image size overflows");
        };
        let image =
            |p: *const u8| GrayImage::new(height, width, std::slice::from_raw_parts(p, n).to_vec());
        let (l, r) = match (image(left), image(right)) {
            (Ok(l), Ok(r)) => (l, r),
            (Err(e), _) | (_, Err(e)) => return fail(FbpStatus::InvalidArgument, e),
        };
        let p = &*params;
        let params = StereoParams {
            num_disparities: p.num_disparities,
            alpha: p.alpha,
            t_b: p.t_b,
            beta: p.beta,
            t_u: p.t_u,
            sweeps: p.sweeps,
        };
        match build_stereo_mrf(&l, &r, &params) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FbpModel { inner }));
                FbpStatus::Ok
            }
            Err(e) => fail(FbpStatus::ModelError, e),
        }
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbp_model_free(model: *mut FbpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Node count, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbp_model_num_nodes(model: *const FbpModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_nodes())
}

/// Label count, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbp_model_num_labels(model: *const FbpModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_labels())
}

unsafe fn output<'a, T>(buf: *mut T, len: usize, needed: usize) -> Result<&'a mut [T], FbpStatus> {
    if buf.is_null() {
        return Err(fail(FbpStatus::NullPointer, "null output buffer"));
    }
    if len < needed {
        return Err(fail(
            FbpStatus::BufferTooSmall,
            format!("output buffer holds {len} values, {needed} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(buf, needed))
}

/// Runs `sweeps` sweeps of the model's default schedule and writes one label
/// per node into `labels_out`.
///
/// # Safety
/// `model` must be a live handle; `labels_out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fbp_run_labels(
    model: *const FbpModel,
    kernel: u32,
    domain: u32,
    sweeps: usize,
    labels_out: *mut u32,
    len: usize,
) -> FbpStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(FbpStatus::NullPointer, "null model");
        };
        let (Some(k), Some(d)) = (kernel_from(kernel), domain_from(domain)) else {
            return fail(FbpStatus::InvalidArgument, "unknown kernel or domain");
        };
        let out = match output(labels_out, len, m.inner.num_nodes()) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let schedule = SweepSchedule::for_model(&m.inner);
        let result =
            run_sweeps(&m.inner, &schedule, sweeps, k, d).and_then(|s| labels(&m.inner, &s));
        match result {
            Ok(l) => {
                for (o, v) in out.iter_mut().zip(l) {
                    *o = v as u32;
                }
                FbpStatus::Ok
            }
            Err(e) => fail(FbpStatus::InferenceError, e),
        }
    })
}

/// Sum-product beliefs after `sweeps` sweeps, node-major
/// (`num_nodes * num_labels` values).
///
/// # Safety
/// `model` must be a live handle; `beliefs_out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fbp_run_beliefs(
    model: *const FbpModel,
    kernel: u32,
    sweeps: usize,
    beliefs_out: *mut f64,
    len: usize,
) -> FbpStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(FbpStatus::NullPointer, "null model");
        };
        let Some(k) = kernel_from(kernel) else {
            return fail(FbpStatus::InvalidArgument, "unknown kernel");
        };
        let out = match output(beliefs_out, len, m.inner.num_nodes() * m.inner.num_labels()) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let schedule = SweepSchedule::for_model(&m.inner);
        let result = run_sweeps(&m.inner, &schedule, sweeps, k, Domain::SumProduct)
            .and_then(|s| compute_beliefs(&m.inner, &s));
        match result {
            Ok(b) => {
                out.copy_from_slice(b.as_slice());
                FbpStatus::Ok
            }
            Err(e) => fail(FbpStatus::InferenceError, e),
        }
    })
}

/// Exact marginals by enumeration, node-major. Fails with `TooLarge` past the
/// enumeration limit.
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fbp_exact_marginals(
    model: *const FbpModel,
    out: *mut f64,
    len: usize,
) -> FbpStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(FbpStatus::NullPointer, "null model");
        };
        let buf = match output(out, len, m.inner.num_nodes() * m.inner.num_labels()) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match enumerate_exact(&m.inner) {
            Ok(r) => {
                buf.copy_from_slice(r.marginals());
                FbpStatus::Ok
            }
            Err(e @ fastbp::oracle::OracleError::TooLarge { .. }) => fail(FbpStatus::TooLarge, e),
            Err(e) => fail(FbpStatus::InferenceError, e),
        }
    })
}
