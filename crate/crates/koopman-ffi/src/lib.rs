//! C ABI for the koopman-core EDMD toolkit.
//!
//! Models are opaque handles created by `koop_model_fit`, `koop_model_load`,
//! or `koop_model_from_json` and released with `koop_model_free`. Every
//! fallible call returns a [`KoopStatus`]; outputs are written through
//! caller-provided pointers. All matrices cross the boundary as row-major
//! `f64` buffers.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use ndarray::Array1;

use koopman_core::edmd::{fit, KoopmanModel, SnapshotPairs};
use koopman_core::observables::{Dictionary, DictionarySpec};
use koopman_core::State;

/// Result of every fallible FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KoopStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A size, count, or numeric argument was out of range.
    InvalidArgument = 2,
    /// The least-squares fit failed (degenerate data or dictionary).
    FitFailed = 3,
    /// Prediction failed (dimension mismatch or numeric breakdown).
    PredictFailed = 4,
    /// Reading or writing a model file failed.
    IoFailed = 5,
    /// A JSON payload (dictionary spec or model) did not parse.
    ParseFailed = 6,
}

/// Opaque fitted model handle.
pub struct KoopModel {
    inner: KoopmanModel,
}

/// Short static description of a status code.
#[no_mangle]
pub extern "C" fn koop_status_message(status: KoopStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        KoopStatus::Ok => b"ok\0",
        KoopStatus::NullArgument => b"null pointer argument\0",
        KoopStatus::InvalidArgument => b"invalid argument\0",
        KoopStatus::FitFailed => b"model fit failed\0",
        KoopStatus::PredictFailed => b"prediction failed\0",
        KoopStatus::IoFailed => b"file I/O failed\0",
        KoopStatus::ParseFailed => b"JSON parse failed\0",
    };
    msg.as_ptr() as *const c_char
}

unsafe fn states_from_raw(data: *const f64, n: usize, dim: usize) -> Vec<State> {
    let slice = std::slice::from_raw_parts(data, n * dim);
    slice
        .chunks_exact(dim)
        .map(|c| Array1::from(c.to_vec()))
        .collect()
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Fits an EDMD model from `n_pairs` snapshot pairs.
///
/// `x` and `y` are row-major `n_pairs x state_dim` buffers holding the
/// current and one-step-advanced states; `dt` is the sampling interval;
/// `dict_json` is a dictionary spec such as `{"kind":"rbf","n_centers":100}`
/// (concrete centers and widths are derived from the `x` states); pass
/// `svd_rtol <= 0` for the default truncation threshold. On success writes a
/// handle to `out_model`, owned by the caller until `koop_model_free`.
///
/// # Safety
/// `x` and `y` must point to `n_pairs * state_dim` readable doubles and
/// `dict_json` to a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn koop_model_fit(
    x: *const f64,
    y: *const f64,
    n_pairs: usize,
    state_dim: usize,
    dt: f64,
    dict_json: *const c_char,
    svd_rtol: f64,
    out_model: *mut *mut KoopModel,
) -> KoopStatus {
    if x.is_null() || y.is_null() || out_model.is_null() {
        return KoopStatus::NullArgument;
    }
    if n_pairs == 0 || state_dim == 0 || !(dt > 0.0) {
        return KoopStatus::InvalidArgument;
    }
    let Some(json) = cstr(dict_json) else {
        return KoopStatus::NullArgument;
    };
    let Ok(spec) = serde_json::from_str::<DictionarySpec>(json) else {
        return KoopStatus::ParseFailed;
    };
    let xs = states_from_raw(x, n_pairs, state_dim);
    let ys = states_from_raw(y, n_pairs, state_dim);
    let Ok(dict) = Dictionary::from_spec(&spec, &xs) else {
        return KoopStatus::FitFailed;
    };
    let pairs = SnapshotPairs { x: xs, y: ys, dt };
    let rtol = if svd_rtol > 0.0 {
        svd_rtol
    } else {
        koopman_core::edmd::DEFAULT_SVD_RTOL
    };
    match fit(&pairs, &dict, rtol) {
        Ok(inner) => {
            *out_model = Box::into_raw(Box::new(KoopModel { inner }));
            KoopStatus::Ok
        }
        Err(_) => KoopStatus::FitFailed,
    }
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be a pointer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn koop_model_free(model: *mut KoopModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// State dimension of the model; 0 for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn koop_model_state_dim(model: *const KoopModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.state_dim())
}

/// Dimension of the lifted space (and eigenvalue count); 0 for null.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn koop_model_lifted_dim(model: *const KoopModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.lifted_dim())
}

/// RMS lifted one-step fit residual; NaN for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn koop_model_fit_residual(model: *const KoopModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.inner.fit_residual)
}

/// Predicts the state `l` steps ahead of `x0`, writing `state_dim` doubles
/// to `out`. `l = 0` returns the model's reconstruction of `x0` itself.
///
/// # Safety
/// `x0` and `out` must each point to `state_dim` doubles matching the model.
#[no_mangle]
pub unsafe extern "C" fn koop_model_predict(
    model: *const KoopModel,
    x0: *const f64,
    state_dim: usize,
    l: usize,
    out: *mut f64,
) -> KoopStatus {
    let Some(m) = model.as_ref() else {
        return KoopStatus::NullArgument;
    };
    if x0.is_null() || out.is_null() {
        return KoopStatus::NullArgument;
    }
    if state_dim != m.inner.state_dim() {
        return KoopStatus::InvalidArgument;
    }
    let x = Array1::from(std::slice::from_raw_parts(x0, state_dim).to_vec());
    match m.inner.predict(&x, l) {
        Ok(pred) => {
            std::slice::from_raw_parts_mut(out, state_dim).copy_from_slice(
                pred.as_slice().expect("contiguous prediction"),
            );
            KoopStatus::Ok
        }
        Err(_) => KoopStatus::PredictFailed,
    }
}

/// Copies the Koopman eigenvalues into `out_re`/`out_im`, each of capacity
/// `cap >= koop_model_lifted_dim(model)`.
///
/// # Safety
/// `out_re` and `out_im` must each point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn koop_model_eigenvalues(
    model: *const KoopModel,
    out_re: *mut f64,
    out_im: *mut f64,
    cap: usize,
) -> KoopStatus {
    let Some(m) = model.as_ref() else {
        return KoopStatus::NullArgument;
    };
    if out_re.is_null() || out_im.is_null() {
        return KoopStatus::NullArgument;
    }
    let d = m.inner.lifted_dim();
    if cap < d {
        return KoopStatus::InvalidArgument;
    }
    let re = std::slice::from_raw_parts_mut(out_re, d);
    let im = std::slice::from_raw_parts_mut(out_im, d);
    for (i, z) in m.inner.eigenvalues.iter().enumerate() {
        re[i] = z.re;
        im[i] = z.im;
    }
    KoopStatus::Ok
}

/// Serializes the model to JSON. The returned string must be released with
/// `koop_string_free`; null is returned only on a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn koop_model_to_json(model: *const KoopModel) -> *mut c_char {
    let Some(m) = model.as_ref() else {
        return ptr::null_mut();
    };
    CString::new(m.inner.to_json())
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Releases a string returned by `koop_model_to_json`. Null is a no-op.
///
/// # Safety
/// `s` must be a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn koop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Deserializes a model from the JSON produced by `koop_model_to_json`.
///
/// # Safety
/// `json` must be a NUL-terminated UTF-8 string, `out_model` non-null.
#[no_mangle]
pub unsafe extern "C" fn koop_model_from_json(
    json: *const c_char,
    out_model: *mut *mut KoopModel,
) -> KoopStatus {
    if out_model.is_null() {
        return KoopStatus::NullArgument;
    }
    let Some(text) = cstr(json) else {
        return KoopStatus::NullArgument;
    };
    match KoopmanModel::from_json(text) {
        Ok(inner) => {
            *out_model = Box::into_raw(Box::new(KoopModel { inner }));
            KoopStatus::Ok
        }
        Err(_) => KoopStatus::ParseFailed,
    }
}

/// Writes the model JSON to `path`.
///
/// # Safety
/// `model` must be a live handle, `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn koop_model_save(
    model: *const KoopModel,
    path: *const c_char,
) -> KoopStatus {
    let Some(m) = model.as_ref() else {
        return KoopStatus::NullArgument;
    };
    let Some(path) = cstr(path) else {
        return KoopStatus::NullArgument;
    };
    match m.inner.save(Path::new(path)) {
        Ok(()) => KoopStatus::Ok,
        Err(_) => KoopStatus::IoFailed,
    }
}

/// Loads a model JSON file written by `koop_model_save`.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string, `out_model` non-null.
#[no_mangle]
pub unsafe extern "C" fn koop_model_load(
    path: *const c_char,
    out_model: *mut *mut KoopModel,
) -> KoopStatus {
    if out_model.is_null() {
        return KoopStatus::NullArgument;
    }
    let Some(path) = cstr(path) else {
        return KoopStatus::NullArgument;
    };
    match KoopmanModel::load(Path::new(path)) {
        Ok(inner) => {
            *out_model = Box::into_raw(Box::new(KoopModel { inner }));
            KoopStatus::Ok
        }
        Err(_) => KoopStatus::IoFailed,
    }
}
