//! C ABI for kgen-core.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`KgenStatus`];
//! on failure `kgen_last_error` gives a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use kgen::anonymity::{apply_anonymization, build_support_maps, AnonymityVerdict, SupportMap};
use kgen::dataset::{load_dataset, Config, Dataset};
use kgen::hierarchy::{build_hierarchies, GeneralizationHierarchy};
use kgen::lattice::LatticeNode;
use kgen::search::{run_algorithm, search_bounds, Algorithm, SearchContext};
use kgen::Error;

/// Result codes. `KGEN_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgenStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    InvalidData = 5,
    InvalidConfig = 6,
    NoSolution = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgenAlgorithm {
    Exhaustive = 0,
    Ola = 1,
    Kgen = 2,
    Random = 3,
}

impl From<KgenAlgorithm> for Algorithm {
    fn from(a: KgenAlgorithm) -> Self {
        match a {
            KgenAlgorithm::Exhaustive => Algorithm::Exhaustive,
            KgenAlgorithm::Ola => Algorithm::Ola,
            KgenAlgorithm::Kgen => Algorithm::Kgen,
            KgenAlgorithm::Random => Algorithm::Random,
        }
    }
}

/// A loaded dataset with its config and generalization hierarchies.
pub struct KgenSession {
    dataset: Dataset,
    config: Config,
    hierarchies: Vec<GeneralizationHierarchy>,
    maps: Vec<SupportMap>,
}

/// Outcome of one search.
pub struct KgenResult {
    node: LatticeNode,
    verdict: AnonymityVerdict,
    precision: f64,
    suppression: f64,
    evaluations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(error: &Error) -> KgenStatus {
    match error {
        Error::Io { .. } => KgenStatus::Io,
        Error::Parse { .. } => KgenStatus::Parse,
        Error::Dataset(_) | Error::Value { .. } | Error::PlaceLookup { .. } => KgenStatus::InvalidData,
        Error::Config(_) => KgenStatus::InvalidConfig,
        Error::NoSolution => KgenStatus::NoSolution,
        Error::Contract(_) | Error::DegenerateAccuracy(_) | Error::Usage(_) => KgenStatus::InvalidArgument,
    }
}

/// Runs `f`, recording its error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), KgenStatus>) -> KgenStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KgenStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            KgenStatus::Panic
        }
    }
}

fn fail(error: Error) -> KgenStatus {
    set_error(error.to_string());
    status_of(&error)
}

fn null(what: &str) -> KgenStatus {
    set_error(format!("{what} is null"));
    KgenStatus::NullPointer
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, KgenStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error(format!("{what} is not valid UTF-8"));
            Err(KgenStatus::InvalidArgument)
        }
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next kgen call on the same thread.
#[no_mangle]
pub extern "C" fn kgen_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a dataset and its TOML config. `delimiter` is the CSV field
/// separator byte (0 means ',').
///
/// # Safety
/// `dataset_path` and `config_path` must be NUL-terminated strings and `out`
/// must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn kgen_session_open(
    dataset_path: *const c_char,
    config_path: *const c_char,
    delimiter: c_char,
    out: *mut *mut KgenSession,
) -> KgenStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let dataset_path = path_arg(dataset_path, "dataset_path")?;
        let config_path = path_arg(config_path, "config_path")?;
        let delimiter = if delimiter == 0 { b',' } else { delimiter as u8 };
        let dataset = load_dataset(&dataset_path, delimiter).map_err(fail)?;
        let config = Config::load(&config_path).map_err(fail)?;
        config.validate(&dataset).map_err(fail)?;
        let hierarchies = build_hierarchies(&dataset, &config).map_err(fail)?;
        let maps = build_support_maps(&dataset, &hierarchies).map_err(fail)?;
        *out = Box::into_raw(Box::new(KgenSession {
            dataset,
            config,
            hierarchies,
            maps,
        }));
        Ok(())
    })
}

/// # Safety
/// `session` must be null or a pointer from `kgen_session_open` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kgen_session_free(session: *mut KgenSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Number of quasi-identifiers, or 0 for a null session.
///
/// # Safety
/// `session` must be null or a live session.
#[no_mangle]
pub unsafe extern "C" fn kgen_session_qi_count(session: *const KgenSession) -> usize {
    session.as_ref().map_or(0, |s| s.hierarchies.len())
}

/// Number of dataset rows, or 0 for a null session.
///
/// # Safety
/// `session` must be null or a live session.
#[no_mangle]
pub unsafe extern "C" fn kgen_session_row_count(session: *const KgenSession) -> usize {
    session.as_ref().map_or(0, |s| s.dataset.n_rows())
}

/// Height of the `index`-th quasi-identifier's hierarchy, or 0 when out of range.
///
/// # Safety
/// `session` must be null or a live session.
#[no_mangle]
pub unsafe extern "C" fn kgen_session_height(session: *const KgenSession, index: usize) -> u32 {
    session
        .as_ref()
        .and_then(|s| s.hierarchies.get(index))
        .map_or(0, GeneralizationHierarchy::height)
}

/// Runs one search with the session's config, overriding the suppression
/// threshold and RNG seed. Returns `KGEN_STATUS_NO_SOLUTION` when no
/// feasible node was found.
///
/// # Safety
/// `session` must be a live session and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kgen_session_run(
    session: *const KgenSession,
    algorithm: KgenAlgorithm,
    suppression_threshold: f64,
    seed: u64,
    out: *mut *mut KgenResult,
) -> KgenStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        if !(0.0..=1.0).contains(&suppression_threshold) {
            set_error(format!("threshold {suppression_threshold} must lie in [0, 1]"));
            return Err(KgenStatus::InvalidArgument);
        }
        let k = s.config.k;
        let bounds = search_bounds(&s.dataset, &s.hierarchies, k, suppression_threshold, s.config.trust_preprocessing)
            .map_err(fail)?;
        let ctx = SearchContext::new(&s.maps, k, suppression_threshold).map_err(fail)?;
        let params = s.config.ga.clone().with_seed(seed);
        let result = run_algorithm(algorithm.into(), &ctx, &bounds, &params).map_err(fail)?;
        let node = result.best.ok_or_else(|| fail(Error::NoSolution))?;
        let verdict = ctx.verdict(&node);
        *out = Box::into_raw(Box::new(KgenResult {
            precision: ctx.precision(&node),
            suppression: verdict.suppressed_rows.len() as f64 / s.dataset.n_rows() as f64,
            verdict,
            evaluations: result.evaluations_used,
            node,
        }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a pointer from `kgen_session_run` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kgen_result_free(result: *mut KgenResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Copies the solution's levels into `buffer` and stores the dimension in
/// `len`. With a null or short buffer only `len` is written and
/// `KGEN_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `result` must be live, `len` writable and `buffer` null or valid for
/// `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn kgen_result_levels(
    result: *const KgenResult,
    buffer: *mut u32,
    capacity: usize,
    len: *mut usize,
) -> KgenStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let levels = r.node.levels();
        *len = levels.len();
        if buffer.is_null() || capacity < levels.len() {
            set_error(format!("buffer holds {capacity} levels, {} needed", levels.len()));
            return Err(KgenStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(levels.as_ptr(), buffer, levels.len());
        Ok(())
    })
}

/// Precision of the solution, NaN for a null result.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn kgen_result_precision(result: *const KgenResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.precision)
}

/// Fraction of rows suppressed, NaN for a null result.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn kgen_result_suppression(result: *const KgenResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.suppression)
}

/// Nodes evaluated by the search, 0 for a null result.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn kgen_result_evaluations(result: *const KgenResult) -> usize {
    result.as_ref().map_or(0, |r| r.evaluations)
}

/// Writes the anonymized dataset as comma-separated CSV.
///
/// # Safety
/// `session` and `result` must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kgen_result_write_csv(
    session: *const KgenSession,
    result: *const KgenResult,
    path: *const c_char,
) -> KgenStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let path = path_arg(path, "path")?;
        if r.node.len() != s.hierarchies.len() {
            set_error("result does not belong to this session");
            return Err(KgenStatus::InvalidArgument);
        }
        let table = apply_anonymization(&s.dataset, &s.config, &s.hierarchies, &r.node, &r.verdict).map_err(fail)?;
        table.write_csv(&path, b',').map_err(fail)
    })
}

/// Mean of `levels[i] / heights[i]`.
///
/// # Safety
/// `levels` and `heights` must be valid for `len` elements and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kgen_precision(
    levels: *const u32,
    heights: *const u32,
    len: usize,
    out: *mut f64,
) -> KgenStatus {
    guard(|| {
        if levels.is_null() || heights.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let node = LatticeNode::new(std::slice::from_raw_parts(levels, len).to_vec());
        let heights = std::slice::from_raw_parts(heights, len);
        *out = kgen::metrics::precision(&node, heights).map_err(fail)?;
        Ok(())
    })
}
