//! C ABI over `rbsynth`: parse, render and measure algorithms, and run the
//! oracle against a configuration.
//!
//! Every fallible call returns an [`RbsStatus`] and writes its result through
//! an out-pointer. On failure a message is kept per thread and can be read
//! with [`rbs_last_error`]. Handles are opaque and owned by the caller until
//! passed to the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rbsynth::config::{ConfigError, RunConfig};
use rbsynth::oracle::{validate_summary, OracleError, Property, ValidationSummary};
use rbsynth::protocol::{
    efficiency_metrics, enumerate_actions, parse_algorithm, reference, render_pseudocode, threshold_count,
    AlgorithmDraft, SystemParams, ThresholdKind,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ConfigError = 4,
    InvalidArgument = 5,
    Incomplete = 6,
    Unsupported = 7,
    StateBudget = 8,
    Io = 9,
    Panic = 10,
}

/// Parsed algorithm.
pub struct RbsAlgorithm(AlgorithmDraft);

/// Loaded run configuration.
pub struct RbsConfig(RunConfig);

/// Oracle result, with the counterexample when there is one.
pub struct RbsVerdict(ValidationSummary);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RbsMetrics {
    pub messages_worst_case: u64,
    pub comm_steps: u64,
    pub deliver_cost: u64,
}

/// Property codes returned by [`rbs_verdict_property`].
pub const RBS_PROPERTY_NONE: i32 = -1;
pub const RBS_PROPERTY_VALIDITY: i32 = 0;
pub const RBS_PROPERTY_AGREEMENT: i32 = 1;
pub const RBS_PROPERTY_INTEGRITY: i32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type FfiResult<T> = Result<T, RbsStatus>;

fn fail<T>(status: RbsStatus, msg: impl ToString) -> FfiResult<T> {
    set_error(msg);
    Err(status)
}

/// Runs `f`, mapping panics to [`RbsStatus::Panic`].
fn guard(f: impl FnOnce() -> FfiResult<()>) -> RbsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RbsStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            RbsStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(RbsStatus::NullPointer, format!("{what} is null"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(s),
        Err(e) => fail(RbsStatus::InvalidUtf8, format!("{what}: {e}")),
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(RbsStatus::NullPointer, format!("{what} is null")),
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return fail(RbsStatus::NullPointer, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = match CString::new(s) {
        Ok(c) => c,
        Err(e) => return fail(RbsStatus::InvalidArgument, e),
    };
    write_out(out, c.into_raw())
}

fn config_status(e: &ConfigError) -> RbsStatus {
    match e {
        ConfigError::MissingFile { .. } | ConfigError::Io { .. } => RbsStatus::Io,
        _ => RbsStatus::ConfigError,
    }
}

fn oracle_status(e: &OracleError) -> RbsStatus {
    match e {
        OracleError::InvalidConfig { .. } => RbsStatus::ConfigError,
        OracleError::Incomplete => RbsStatus::Incomplete,
        OracleError::Unsupported(_) => RbsStatus::Unsupported,
        OracleError::StateBudget { .. } => RbsStatus::StateBudget,
        OracleError::Replay(_) => RbsStatus::Panic,
    }
}

fn params(n: u32, f: u32) -> FfiResult<SystemParams> {
    SystemParams::new(n as usize, f as usize).or_else(|e| fail(RbsStatus::InvalidArgument, e))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next `rbs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rbs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from an `rbs_*` function and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rbs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Size of the action universe with `max_types` message types.
#[no_mangle]
pub extern "C" fn rbs_action_count(max_types: u32) -> usize {
    enumerate_actions(max_types as usize).len()
}

/// Sender count required by a threshold kind (0 Zero, 1 One, 2 F+1,
/// 3 ceil((N+F)/2), 4 N-F).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_threshold_count(kind: u32, n: u32, f: u32, out: *mut u32) -> RbsStatus {
    guard(|| {
        let Some(&k) = ThresholdKind::ALL.get(kind as usize) else {
            return fail(RbsStatus::InvalidArgument, format!("unknown threshold kind {kind}"));
        };
        let count = threshold_count(k, params(n, f)?);
        write_out(out, count as u32)
    })
}

/// Parses an algorithm in the text format produced by [`rbs_algorithm_render`].
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_algorithm_parse(text: *const c_char, out: *mut *mut RbsAlgorithm) -> RbsStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        let alg = parse_algorithm(text).or_else(|e| fail(RbsStatus::ParseError, e))?;
        write_out(out, Box::into_raw(Box::new(RbsAlgorithm(alg))))
    })
}

/// One of the four shipped reference algorithms, numbered 1 to 4.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_algorithm_reference(index: u32, out: *mut *mut RbsAlgorithm) -> RbsStatus {
    guard(|| {
        let alg = match index {
            1 => reference::algorithm1(),
            2 => reference::algorithm2(),
            3 => reference::algorithm3(),
            4 => reference::algorithm4(),
            _ => return fail(RbsStatus::InvalidArgument, format!("no reference algorithm {index}")),
        };
        write_out(out, Box::into_raw(Box::new(RbsAlgorithm(alg))))
    })
}

/// # Safety
/// `alg` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rbs_algorithm_free(alg: *mut RbsAlgorithm) {
    if !alg.is_null() {
        drop(Box::from_raw(alg));
    }
}

/// Pseudocode text; free with [`rbs_string_free`].
///
/// # Safety
/// `alg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_algorithm_render(alg: *const RbsAlgorithm, out: *mut *mut c_char) -> RbsStatus {
    guard(|| {
        let alg = deref(alg, "algorithm")?;
        let text = render_pseudocode(&alg.0).or_else(|e| fail(RbsStatus::Incomplete, e))?;
        write_string(out, text)
    })
}

/// Canonical state key; free with [`rbs_string_free`].
///
/// # Safety
/// `alg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_algorithm_key(alg: *const RbsAlgorithm, out: *mut *mut c_char) -> RbsStatus {
    guard(|| {
        let alg = deref(alg, "algorithm")?;
        write_string(out, alg.0.key().to_string())
    })
}

/// # Safety
/// `alg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_algorithm_metrics(
    alg: *const RbsAlgorithm,
    n: u32,
    f: u32,
    out: *mut RbsMetrics,
) -> RbsStatus {
    guard(|| {
        let alg = deref(alg, "algorithm")?;
        let m = efficiency_metrics(&alg.0, params(n, f)?).or_else(|e| fail(RbsStatus::Incomplete, e))?;
        write_out(
            out,
            RbsMetrics {
                messages_worst_case: m.messages_worst_case as u64,
                comm_steps: m.comm_steps as u64,
                deliver_cost: m.deliver_cost as u64,
            },
        )
    })
}

/// Shipped configuration by name (`no_failure`, `crash`, `byzantine`,
/// `modified_crash`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_config_preset(name: *const c_char, out: *mut *mut RbsConfig) -> RbsStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let cfg = RunConfig::preset(name).or_else(|e| fail(config_status(&e), e))?;
        write_out(out, Box::into_raw(Box::new(RbsConfig(cfg))))
    })
}

/// Parses configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_config_parse(text: *const c_char, out: *mut *mut RbsConfig) -> RbsStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        let cfg = RunConfig::parse(text).or_else(|e| fail(config_status(&e), e))?;
        write_out(out, Box::into_raw(Box::new(RbsConfig(cfg))))
    })
}

/// Loads a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_config_load(path: *const c_char, out: *mut *mut RbsConfig) -> RbsStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let cfg = RunConfig::load(path.as_ref()).or_else(|e| fail(config_status(&e), e))?;
        write_out(out, Box::into_raw(Box::new(RbsConfig(cfg))))
    })
}

/// # Safety
/// `cfg` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rbs_config_free(cfg: *mut RbsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Checks `alg` under every failure mode enabled in `cfg`. A violation is a
/// successful call; inspect the verdict.
///
/// # Safety
/// `alg` and `cfg` must be live handles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_validate(
    alg: *const RbsAlgorithm,
    cfg: *const RbsConfig,
    out: *mut *mut RbsVerdict,
) -> RbsStatus {
    guard(|| {
        let alg = deref(alg, "algorithm")?;
        let cfg = deref(cfg, "config")?;
        let summary = validate_summary(&alg.0, &cfg.0.validation).or_else(|e| fail(oracle_status(&e), e))?;
        write_out(out, Box::into_raw(Box::new(RbsVerdict(summary))))
    })
}

/// # Safety
/// `v` must be a live handle or null (null reads as incorrect).
#[no_mangle]
pub unsafe extern "C" fn rbs_verdict_is_correct(v: *const RbsVerdict) -> bool {
    v.as_ref().is_some_and(|v| v.0.verdict.is_correct())
}

/// One of the `RBS_PROPERTY_*` codes.
///
/// # Safety
/// `v` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rbs_verdict_property(v: *const RbsVerdict) -> i32 {
    match v.as_ref().and_then(|v| v.0.verdict.violation()).map(|x| x.property) {
        None => RBS_PROPERTY_NONE,
        Some(Property::Validity) => RBS_PROPERTY_VALIDITY,
        Some(Property::Agreement) => RBS_PROPERTY_AGREEMENT,
        Some(Property::Integrity) => RBS_PROPERTY_INTEGRITY,
    }
}

/// Scenarios explored before the verdict was reached.
///
/// # Safety
/// `v` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rbs_verdict_scenarios(v: *const RbsVerdict) -> usize {
    v.as_ref().map_or(0, |v| v.0.scenarios)
}

/// Global states visited across those scenarios.
///
/// # Safety
/// `v` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rbs_verdict_states(v: *const RbsVerdict) -> usize {
    v.as_ref().map_or(0, |v| v.0.states)
}

/// Human-readable verdict including the counterexample trace; free with
/// [`rbs_string_free`].
///
/// # Safety
/// `v` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rbs_verdict_describe(v: *const RbsVerdict, out: *mut *mut c_char) -> RbsStatus {
    guard(|| {
        let v = deref(v, "verdict")?;
        write_string(out, v.0.verdict.to_string())
    })
}

/// # Safety
/// `v` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rbs_verdict_free(v: *mut RbsVerdict) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}
