//! C ABI over `omicsurv`.
//!
//! Every fallible function returns an [`OmsStatus`]; on failure the message
//! is kept per thread and can be fetched with [`oms_last_error`]. Objects
//! cross the boundary as opaque handles that the caller releases with the
//! matching `*_free` function. Strings returned to the caller are owned by
//! the caller and released with [`oms_string_free`].
//!
//! Configs are JSON objects with the pipeline config keys; a null pointer
//! selects the defaults.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::ArrayView2;
use omicsurv::data::{load_dataset, MultiOmicsDataset, SurvivalLabels};
use omicsurv::integrators::{FingerprintModel, ModelKind};
use omicsurv::pipeline::{cross_validate, CvReport, PipelineConfig};
use omicsurv::report::{generate_synthetic, report_csv, report_to_json, SyntheticSpec};
use omicsurv::survival::concordance_index;
use omicsurv::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    InvalidConfig = 4,
    Io = 5,
    MalformedData = 6,
    NoEvents = 7,
    NotFitted = 8,
    AllFoldsFailed = 9,
    NumericalFailure = 10,
    UnsupportedModel = 11,
    Panic = 12,
}

/// A loaded or generated multi-omics cohort.
pub struct OmsDataset(MultiOmicsDataset);

/// Fold-level results of a cross-validation run.
pub struct OmsReport(CvReport);

/// A fitted fingerprint model.
pub struct OmsModel(FingerprintModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OmsStatus {
    match e {
        Error::InvalidConfig(_) => OmsStatus::InvalidConfig,
        Error::Io(_) | Error::MissingSurvivalFile(_) | Error::NoLayers(_) => OmsStatus::Io,
        Error::NonNumeric { .. }
        | Error::DuplicateSample { .. }
        | Error::DuplicateFeature { .. }
        | Error::Malformed { .. }
        | Error::EmptySampleIntersection
        | Error::Json(_)
        | Error::Csv(_) => OmsStatus::MalformedData,
        Error::NoEvents => OmsStatus::NoEvents,
        Error::NotFitted => OmsStatus::NotFitted,
        Error::AllFoldsFailed => OmsStatus::AllFoldsFailed,
        Error::NotConverged | Error::NonFiniteLoss { .. } | Error::SvdFailed | Error::NonFinite(_) => OmsStatus::NumericalFailure,
        Error::UnsupportedModel(_) => OmsStatus::UnsupportedModel,
        _ => OmsStatus::InvalidInput,
    }
}

struct Failure(OmsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, turning errors and panics into a status plus the thread's last
/// error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OmsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_error(format!("internal panic: {msg}"));
            OmsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(OmsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(OmsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn config_arg(p: *const c_char) -> Result<PipelineConfig, Failure> {
    if p.is_null() {
        return Ok(PipelineConfig::default());
    }
    Ok(PipelineConfig::from_json(str_arg(p, "config_json")?)?)
}

unsafe fn kind_arg(p: *const c_char) -> Result<ModelKind, Failure> {
    Ok(str_arg(p, "model")?.parse::<ModelKind>()?)
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn labels_arg(time: *const f64, event: *const u8, n: usize) -> Result<SurvivalLabels, Failure> {
    let t = slice_arg(time, n, "time")?;
    let e = slice_arg(event, n, "event")?;
    Ok(SurvivalLabels::new(t.to_vec(), e.iter().map(|&v| v != 0).collect())?)
}

unsafe fn matrix_arg<'a>(x: *const f64, rows: usize, cols: usize) -> Result<ArrayView2<'a, f64>, Failure> {
    let len = rows.checked_mul(cols).ok_or_else(|| Failure(OmsStatus::InvalidInput, "matrix size overflows".into()))?;
    let data = slice_arg(x, len, "x")?;
    Ok(ArrayView2::from_shape((rows, cols), data).expect("length checked"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(OmsStatus::InvalidInput, "string contains a nul byte".into()))?;
    write_out(out, c.into_raw())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn oms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the calling thread's most recent error message, or null if none
/// was recorded. Release with [`oms_string_free`].
#[no_mangle]
pub extern "C" fn oms_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn oms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a dataset directory (one TSV per layer plus `survival.tsv`).
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn oms_dataset_load(path: *const c_char, out: *mut *mut OmsDataset) -> OmsStatus {
    guard(|| {
        let ds = load_dataset(str_arg(path, "path")?)?;
        write_out(out, Box::into_raw(Box::new(OmsDataset(ds))))
    })
}

/// Generates a synthetic cohort from a JSON spec with keys `n_samples`,
/// `layers` (`[[name, width], ...]`), `planted`
/// (`[{"layer", "index", "weight"}, ...]`), `censoring_rate` and `seed`.
///
/// # Safety
/// `spec_json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn oms_dataset_synthetic(spec_json: *const c_char, out: *mut *mut OmsDataset) -> OmsStatus {
    guard(|| {
        let spec: SyntheticSpec = serde_json::from_str(str_arg(spec_json, "spec_json")?).map_err(Error::from)?;
        let ds = generate_synthetic(&spec)?;
        write_out(out, Box::into_raw(Box::new(OmsDataset(ds))))
    })
}

/// # Safety
/// `ds` must be a live dataset handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn oms_dataset_shape(ds: *const OmsDataset, n_samples: *mut usize, n_layers: *mut usize) -> OmsStatus {
    guard(|| {
        let ds = &handle(ds, "dataset")?.0;
        write_out(n_samples, ds.n_samples())?;
        write_out(n_layers, ds.layers().len())
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `ds` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn oms_dataset_free(ds: *mut OmsDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Repeated k-fold cross-validation of one model kind (`"pca"`, `"ae"`,
/// `"sae"` or `"csae"`).
///
/// # Safety
/// `ds` must be a live handle, `model` a nul-terminated string,
/// `config_json` null or a nul-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oms_cross_validate(
    ds: *const OmsDataset,
    model: *const c_char,
    config_json: *const c_char,
    out: *mut *mut OmsReport,
) -> OmsStatus {
    guard(|| {
        let ds = &handle(ds, "dataset")?.0;
        let kind = kind_arg(model)?;
        let config = config_arg(config_json)?;
        let report = cross_validate(ds, kind, &config)?;
        write_out(out, Box::into_raw(Box::new(OmsReport(report))))
    })
}

/// Mean test C-index over successful folds and the number of fold records.
///
/// # Safety
/// `report` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn oms_report_summary(
    report: *const OmsReport,
    mean_c_index: *mut f64,
    n_folds: *mut usize,
    n_failed: *mut usize,
) -> OmsStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        write_out(mean_c_index, r.mean_c_index)?;
        write_out(n_folds, r.folds.len())?;
        write_out(n_failed, r.n_failed)
    })
}

/// Fold record `index` in (repeat, fold) order. `c_index` is NaN for a
/// failed fold.
///
/// # Safety
/// `report` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn oms_report_fold(
    report: *const OmsReport,
    index: usize,
    repeat: *mut usize,
    fold: *mut usize,
    c_index: *mut f64,
) -> OmsStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let f = r.folds.get(index).ok_or(Error::IndexOutOfRange { index, width: r.folds.len() })?;
        write_out(repeat, f.repeat_index)?;
        write_out(fold, f.fold_index)?;
        write_out(c_index, f.c_index.unwrap_or(f64::NAN))
    })
}

/// Report as CSV (`as_json == 0`) or JSON. Release with [`oms_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oms_report_serialize(report: *const OmsReport, as_json: i32, out: *mut *mut c_char) -> OmsStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let text = if as_json != 0 { report_to_json(r)? } else { report_csv(r)? };
        write_string(out, text)
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn oms_report_free(report: *mut OmsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Fits a model on a row-major `n x d` matrix. `time`/`event` may be null
/// for the unsupervised kinds.
///
/// # Safety
/// `x` must hold `n * d` values, `time` and `event` `n` values each (or be
/// null), strings must be nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oms_model_fit(
    model: *const c_char,
    config_json: *const c_char,
    x: *const f64,
    n: usize,
    d: usize,
    time: *const f64,
    event: *const u8,
    seed: u64,
    out: *mut *mut OmsModel,
) -> OmsStatus {
    guard(|| {
        let kind = kind_arg(model)?;
        let config = config_arg(config_json)?;
        let x = matrix_arg(x, n, d)?;
        let labels = if time.is_null() && event.is_null() { None } else { Some(labels_arg(time, event, n)?) };
        let mut m = FingerprintModel::new(kind, config.model_config(), seed);
        m.fit(x, labels.as_ref())?;
        write_out(out, Box::into_raw(Box::new(OmsModel(m))))
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oms_model_n_fingerprints(model: *const OmsModel, out: *mut usize) -> OmsStatus {
    guard(|| write_out(out, handle(model, "model")?.0.n_fingerprints()?))
}

/// Writes the `n x F` fingerprints row-major into `out`, which must have
/// room for `out_len >= n * F` values.
///
/// # Safety
/// `x` must hold `n * d` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn oms_model_transform(
    model: *const OmsModel,
    x: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
    out_len: usize,
) -> OmsStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let z = m.transform(matrix_arg(x, n, d)?)?;
        if out_len < z.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), got: out_len }.into());
        }
        if out.is_null() && !z.is_empty() {
            return Err(null("out"));
        }
        for (i, v) in z.iter().enumerate() {
            out.add(i).write(*v);
        }
        Ok(())
    })
}

/// Model as JSON. Release with [`oms_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oms_model_to_json(model: *const OmsModel, out: *mut *mut c_char) -> OmsStatus {
    guard(|| write_string(out, handle(model, "model")?.0.to_json()?))
}

/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oms_model_from_json(json: *const c_char, out: *mut *mut OmsModel) -> OmsStatus {
    guard(|| {
        let m = FingerprintModel::from_json(str_arg(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(OmsModel(m))))
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn oms_model_free(model: *mut OmsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Harrell's C-index of `predictions` (higher = riskier) against survival
/// labels; `event[i] != 0` marks an observed event.
///
/// # Safety
/// The three arrays must hold `n` values each and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oms_concordance_index(
    predictions: *const f64,
    time: *const f64,
    event: *const u8,
    n: usize,
    out: *mut f64,
) -> OmsStatus {
    guard(|| {
        let labels = labels_arg(time, event, n)?;
        let c = concordance_index(slice_arg(predictions, n, "predictions")?, &labels)?;
        write_out(out, c)
    })
}
