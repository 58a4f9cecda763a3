//! C ABI for loading `sresnet` checkpoints, running inference and computing
//! similarity metrics.
//!
//! Every function returns an [`SrnStatus`]; on failure a message is kept per
//! thread and can be read with [`srn_last_error_message`]. Handles are
//! opaque and must be released with [`srn_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sresnet::data::Standardization;
use sresnet::model::{Checkpoint, Mode, Model};
use sresnet::similarity;
use sresnet::tensor::Tensor;
use sresnet::train::predictions;
use sresnet::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Version = 5,
    ShapeMismatch = 6,
    Dimension = 7,
    UndefinedSimilarity = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

/// A loaded model in inference mode together with its input standardization.
pub struct SrnModel {
    model: Model,
    standardization: Standardization,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NUL bytes replaced"));
}

fn status_of(err: &Error) -> SrnStatus {
    match err {
        Error::Io { .. } => SrnStatus::Io,
        Error::Format(_) | Error::Truncated(_) | Error::Json(_) => SrnStatus::Format,
        Error::Version { .. } => SrnStatus::Version,
        Error::ShapeMismatch(_) => SrnStatus::ShapeMismatch,
        Error::Dimension(_) => SrnStatus::Dimension,
        Error::UndefinedSimilarity(_) => SrnStatus::UndefinedSimilarity,
        Error::Config(_) | Error::Contract(_) => SrnStatus::InvalidArgument,
        _ => SrnStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (SrnStatus, String)>) -> SrnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SrnStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SrnStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (SrnStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SrnStatus, String) {
    (SrnStatus::NullPointer, format!("{what} is null"))
}

fn model_ref<'a>(m: *const SrnModel) -> Result<&'a SrnModel, (SrnStatus, String)> {
    // SAFETY: non-null handles come from `srn_model_load` and stay valid until `srn_model_free`.
    unsafe { m.as_ref() }.ok_or_else(|| null("model"))
}

/// # Safety
/// `x` must be null or point to `len` readable doubles.
unsafe fn input<'a>(
    x: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (SrnStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if x.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(x, len))
}

/// Loads a checkpoint using the configuration stored in its header.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srn_model_load(path: *const c_char, out: *mut *mut SrnModel) -> SrnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SrnStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let ckpt = Checkpoint::read(path).map_err(lib_err)?;
        let mut model = Model::build(ckpt.config().clone(), 0).map_err(lib_err)?;
        model.load_weights(&ckpt).map_err(lib_err)?;
        model.set_mode(Mode::Inference);
        let standardization = ckpt
            .standardization()
            .cloned()
            .unwrap_or_else(Standardization::identity);
        *out = Box::into_raw(Box::new(SrnModel {
            model,
            standardization,
        }));
        Ok(())
    })
}

/// Releases a handle from [`srn_model_load`]. Null is ignored.
///
/// # Safety
/// `model` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srn_model_free(model: *mut SrnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature vector length, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srn_model_feature_dim(model: *const SrnModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.feature_dim())
}

/// Number of output classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srn_model_num_classes(model: *const SrnModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.config().num_classes)
}

/// Expected input height and width.
///
/// # Safety
/// `model` must be a live handle; `height` and `width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srn_model_input_size(
    model: *const SrnModel,
    height: *mut usize,
    width: *mut usize,
) -> SrnStatus {
    guard(|| {
        let m = model_ref(model)?;
        if height.is_null() || width.is_null() {
            return Err(null("height/width"));
        }
        let (h, w) = m.model.config().input_size;
        *height = h;
        *width = w;
        Ok(())
    })
}

/// Standardized `[n, 3, H, W]` batch from raw `[0, 1]` pixels.
unsafe fn batch(m: &SrnModel, images: *const f64, n: usize) -> Result<Tensor, (SrnStatus, String)> {
    if n == 0 {
        return Err((SrnStatus::InvalidArgument, "batch size is 0".into()));
    }
    let (h, w) = m.model.config().input_size;
    let plane = h * w;
    let pixels = input(images, n * 3 * plane, "images")?;
    let s = &m.standardization;
    let data = pixels
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = (i / plane) % 3;
            (v - s.mean[c]) / s.std[c]
        })
        .collect();
    Tensor::new(&[n, 3, h, w], data).map_err(lib_err)
}

/// Penultimate features for `n` images laid out `[n, 3, H, W]` with values
/// in `[0, 1]`. Writes `n * feature_dim` doubles to `out`.
///
/// # Safety
/// `images` must hold `n * 3 * H * W` doubles; `out` must hold `out_len`.
#[no_mangle]
pub unsafe extern "C" fn srn_model_extract_features(
    model: *const SrnModel,
    images: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> SrnStatus {
    guard(|| {
        let m = model_ref(model)?;
        let need = n * m.model.feature_dim();
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < need {
            return Err((
                SrnStatus::BufferTooSmall,
                format!("out holds {out_len}, need {need}"),
            ));
        }
        let x = batch(m, images, n)?;
        let f = m.model.extract_features(&x).map_err(lib_err)?;
        slice::from_raw_parts_mut(out, need).copy_from_slice(f.data());
        Ok(())
    })
}

/// Predicted class index per image (argmax, ties to the lowest index).
///
/// # Safety
/// `images` must hold `n * 3 * H * W` doubles; `labels` must hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn srn_model_predict(
    model: *const SrnModel,
    images: *const f64,
    n: usize,
    labels: *mut usize,
) -> SrnStatus {
    guard(|| {
        let m = model_ref(model)?;
        if labels.is_null() {
            return Err(null("labels"));
        }
        let x = batch(m, images, n)?;
        let logits = m.model.forward(&x).map_err(lib_err)?;
        slice::from_raw_parts_mut(labels, n).copy_from_slice(&predictions(&logits));
        Ok(())
    })
}

type Metric = fn(&[f64], &[f64]) -> sresnet::Result<f64>;

unsafe fn metric(f: Metric, x: *const f64, y: *const f64, dim: usize, out: *mut f64) -> SrnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (a, b) = (input(x, dim, "x")?, input(y, dim, "y")?);
        *out = f(a, b).map_err(lib_err)?;
        Ok(())
    })
}

/// Cosine similarity in `[-1, 1]`; zero vectors yield `UndefinedSimilarity`.
///
/// # Safety
/// `x` and `y` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srn_cosine(
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> SrnStatus {
    metric(similarity::cosine, x, y, dim, out)
}

/// # Safety
/// `x` and `y` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srn_euclidean(
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> SrnStatus {
    metric(similarity::euclidean, x, y, dim, out)
}

/// # Safety
/// `x` and `y` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srn_manhattan(
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> SrnStatus {
    metric(similarity::manhattan, x, y, dim, out)
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn srn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn srn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
