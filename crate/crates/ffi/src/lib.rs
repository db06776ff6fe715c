//! C ABI over the `lrcluster` core.
//!
//! Every fallible function returns an [`LrcStatus`]; on failure the message is
//! available from [`lrc_last_error`] on the same thread. Models and spectra are
//! opaque handles released with their `_free` functions. Operators cross the
//! boundary as row-major D×D arrays of interleaved (re, im) doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lrcluster::bounds::{self, BoundParams, Regime};
use lrcluster::linalg::{C64, CMat};
use lrcluster::model::{LindbladModel, ModelSpec};
use lrcluster::spectral::{self, SpectralData};
use lrcluster::superop::{self, DenseOperator};
use lrcluster::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    TooLarge = 5,
    OutsideValidity = 6,
    Numerical = 7,
    Panic = 8,
}

/// Opaque model handle.
pub struct LrcModel(LindbladModel);

/// Opaque spectral decomposition handle.
pub struct LrcSpectrum(SpectralData);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> LrcStatus {
    match err {
        Error::DimensionMismatch { .. } => LrcStatus::DimensionMismatch,
        Error::TooLarge { .. } | Error::TooLargeForDense { .. } | Error::TooLargeReduced(_) => LrcStatus::TooLarge,
        Error::RegimeInvalid { .. } | Error::OutsideValidity(_) | Error::NoDecay(_) => LrcStatus::OutsideValidity,
        Error::StepFailure { .. }
        | Error::NonPrimitive(_)
        | Error::SingularSteadyState(_)
        | Error::NotReversible(_)
        | Error::LinAlg(_) => LrcStatus::Numerical,
        _ => LrcStatus::InvalidArgument,
    }
}

struct Failure(LrcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(LrcStatus::InvalidArgument, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LrcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LrcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lrcluster".into());
            LrcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LrcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_matrix(data: *const f64, len: usize, dim: usize) -> Result<CMat, Failure> {
    if data.is_null() {
        return Err(null("input matrix"));
    }
    if len != 2 * dim * dim {
        return Err(Error::DimensionMismatch {
            expected: 2 * dim * dim,
            got: len,
        }
        .into());
    }
    let s = std::slice::from_raw_parts(data, len);
    Ok(CMat::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        C64::new(s[k], s[k + 1])
    }))
}

unsafe fn write_matrix(m: &CMat, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    let dim = m.nrows();
    if len != 2 * dim * dim {
        return Err(Error::DimensionMismatch {
            expected: 2 * dim * dim,
            got: len,
        }
        .into());
    }
    let s = std::slice::from_raw_parts_mut(out, len);
    for i in 0..dim {
        for j in 0..dim {
            let k = 2 * (i * dim + j);
            s[k] = m[(i, j)].re;
            s[k + 1] = m[(i, j)].im;
        }
    }
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

/// Message of the last failure on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn lrc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn lrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from a JSON model spec (`{"family": "davies", "N": 4, ...}`).
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrc_model_from_spec(spec_json: *const c_char, out: *mut *mut LrcModel) -> LrcStatus {
    guard(|| {
        let spec: ModelSpec = serde_json::from_str(str_arg(spec_json, "spec_json")?)?;
        let model = spec.build()?;
        put(out, Box::into_raw(Box::new(LrcModel(model))))
    })
}

/// Loads a model from the exported JSON term list.
///
/// # Safety
/// `model_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrc_model_from_export(model_json: *const c_char, out: *mut *mut LrcModel) -> LrcStatus {
    guard(|| {
        let model = LindbladModel::from_json(str_arg(model_json, "model_json")?)?;
        put(out, Box::into_raw(Box::new(LrcModel(model))))
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrc_model_free(model: *mut LrcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrc_model_num_sites(model: *const LrcModel, out: *mut usize) -> LrcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        put(out, m.0.num_sites())
    })
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrc_model_hilbert_dim(model: *const LrcModel, out: *mut usize) -> LrcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        put(out, m.0.hilbert_dim())
    })
}

unsafe fn apply(
    model: *const LrcModel,
    input: *const f64,
    len: usize,
    out: *mut f64,
    adjoint: bool,
) -> LrcStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let x = DenseOperator::new(read_matrix(input, len, m.hilbert_dim())?)?;
        let y = if adjoint {
            superop::apply_adjoint(m, &x)?
        } else {
            superop::apply_forward(m, &x)?
        };
        write_matrix(&y.matrix, out, len)
    })
}

/// Heisenberg-picture generator applied to a D×D operator. `len` is 2·D² for both buffers.
///
/// # Safety
/// `input` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrc_apply_adjoint(
    model: *const LrcModel,
    input: *const f64,
    len: usize,
    out: *mut f64,
) -> LrcStatus {
    apply(model, input, len, out, true)
}

/// Schrödinger-picture generator applied to a D×D operator.
///
/// # Safety
/// `input` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrc_apply_forward(
    model: *const LrcModel,
    input: *const f64,
    len: usize,
    out: *mut f64,
) -> LrcStatus {
    apply(model, input, len, out, false)
}

/// Full eigendecomposition of the generator.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrc_spectrum_analyze(model: *const LrcModel, out: *mut *mut LrcSpectrum) -> LrcStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let s = spectral::analyze(m)?;
        put(out, Box::into_raw(Box::new(LrcSpectrum(s))))
    })
}

/// # Safety
/// `spectrum` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrc_spectrum_free(spectrum: *mut LrcSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// # Safety
/// `spectrum` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrc_spectrum_gap(spectrum: *const LrcSpectrum, out: *mut f64) -> LrcStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        put(out, s.0.gap)
    })
}

/// # Safety
/// `spectrum` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrc_spectrum_len(spectrum: *const LrcSpectrum, out: *mut usize) -> LrcStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        put(out, s.0.len())
    })
}

/// Writes the eigenvalues as interleaved (re, im) pairs; `len` must be 2·lrc_spectrum_len.
///
/// # Safety
/// `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrc_spectrum_eigenvalues(spectrum: *const LrcSpectrum, out: *mut f64, len: usize) -> LrcStatus {
    guard(|| {
        let s = &spectrum.as_ref().ok_or_else(|| null("spectrum"))?.0;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if len != 2 * s.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * s.len(),
                got: len,
            }
            .into());
        }
        let buf = std::slice::from_raw_parts_mut(out, len);
        for (k, ev) in s.eigenvalues.iter().enumerate() {
            buf[2 * k] = ev.re;
            buf[2 * k + 1] = ev.im;
        }
        Ok(())
    })
}

/// Writes the steady state as a D×D interleaved matrix; `len` must be 2·D².
///
/// # Safety
/// `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrc_spectrum_steady_state(spectrum: *const LrcSpectrum, out: *mut f64, len: usize) -> LrcStatus {
    guard(|| {
        let s = &spectrum.as_ref().ok_or_else(|| null("spectrum"))?.0;
        write_matrix(&s.steady_state.matrix, out, len)
    })
}

/// Light-cone envelope C(r, t). `params_json` may be NULL for defaults; `alpha`
/// and `d` always override it.
///
/// # Safety
/// `regime` must be a NUL-terminated string, `params_json` NULL or one, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lrc_envelope_eval(
    regime: *const c_char,
    params_json: *const c_char,
    alpha: f64,
    d: usize,
    r: f64,
    t: f64,
    out: *mut f64,
) -> LrcStatus {
    guard(|| {
        let regime: Regime = str_arg(regime, "regime")?.parse()?;
        let mut p: BoundParams = if params_json.is_null() {
            BoundParams::default()
        } else {
            serde_json::from_str(str_arg(params_json, "params_json")?)?
        };
        p.alpha = alpha;
        p.d = d;
        put(out, bounds::envelope_lr(&p, regime, r, t)?)
    })
}
