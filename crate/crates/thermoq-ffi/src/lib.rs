//! C ABI over `thermoq`.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json` or
//! `thermoq_map_from_kraus` and released with the matching `*_free`. Every
//! call returns a [`ThermoqStatus`]; on failure the message is available from
//! [`thermoq_last_error_message`] on the same thread. Reports come back as
//! NUL-terminated JSON strings owned by the caller, freed with
//! [`thermoq_string_free`]. Complex arrays are interleaved `(re, im)` doubles
//! in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thermoq::cli;
use thermoq::measurements::Instrument;
use thermoq::scaling::{decide_rank_nondecreasing, Config, Verdict};
use thermoq::{CMatrix, CPMap, Error, Tolerances, C64};

/// Opaque CP map handle.
pub struct ThermoqMap(CPMap);

/// Opaque instrument handle.
pub struct ThermoqInstrument(Instrument);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThermoqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Domain = 4,
    Panic = 5,
}

/// Rank non-decreasing decision.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThermoqVerdict {
    Yes = 0,
    No = 1,
    Inconclusive = 2,
}

/// Tolerance overrides; any non-positive or non-finite field keeps the default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ThermoqTolerances {
    pub herm_tol: f64,
    pub psd_tol: f64,
    pub trace_tol: f64,
    pub proj_tol: f64,
    pub span_tol: f64,
    pub rank_tol: f64,
    pub fixed_tol: f64,
    pub eff_tol: f64,
    pub ds_eps: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<(CString, CString)>> = const { RefCell::new(None) };
}

fn set_error(kind: &str, msg: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some((clean(kind), clean(msg))));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(ThermoqStatus, String, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(ThermoqStatus::Domain, e.kind().into(), e.to_string())
    }
}

fn null() -> Fail {
    Fail(ThermoqStatus::NullPointer, "NullPointer".into(), "null pointer argument".into())
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(ThermoqStatus::InvalidArgument, "InvalidArgument".into(), msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ThermoqStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ThermoqStatus::Ok,
        Ok(Err(Fail(status, kind, msg))) => {
            set_error(&kind, &msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error("Panic", &msg);
            ThermoqStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|e| invalid(format!("input is not UTF-8: {e}")))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, def: &str) -> Result<T, Fail> {
    cli::parse_checked(text, def).map_err(|e| {
        let v = e.to_json();
        let kind = v["error"]["kind"].as_str().unwrap_or("Parse").to_string();
        let status = if e.exit_code() == 1 { ThermoqStatus::Domain } else { ThermoqStatus::Parse };
        Fail(status, kind, e.message())
    })
}

unsafe fn write_json(out: *mut *mut c_char, v: &serde_json::Value) -> Result<(), Fail> {
    let s = serde_json::to_string(v).map_err(|e| invalid(e.to_string()))?;
    *out = CString::new(s).map_err(|e| invalid(e.to_string()))?.into_raw();
    Ok(())
}

unsafe fn config(tol: *const ThermoqTolerances, seed: u64) -> Result<Config, Fail> {
    let mut t = Tolerances::default();
    if let Some(o) = tol.as_ref() {
        let pick = |slot: &mut f64, v: f64| {
            if v.is_finite() && v > 0.0 {
                *slot = v;
            }
        };
        pick(&mut t.herm_tol, o.herm_tol);
        pick(&mut t.psd_tol, o.psd_tol);
        pick(&mut t.trace_tol, o.trace_tol);
        pick(&mut t.proj_tol, o.proj_tol);
        pick(&mut t.span_tol, o.span_tol);
        pick(&mut t.rank_tol, o.rank_tol);
        pick(&mut t.fixed_tol, o.fixed_tol);
        pick(&mut t.eff_tol, o.eff_tol);
        pick(&mut t.ds_eps, o.ds_eps);
    }
    t.validate()?;
    Ok(Config { tol: t, seed, ..Config::default() })
}

unsafe fn read_matrix(data: *const f64, rows: usize, cols: usize) -> CMatrix {
    let s = std::slice::from_raw_parts(data, 2 * rows * cols);
    CMatrix::from_fn(rows, cols, |r, c| {
        let k = 2 * (r * cols + c);
        C64::new(s[k], s[k + 1])
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn thermoq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn thermoq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(_, m)| m.as_ptr()))
}

/// Error kind name of the last failed call on this thread, or NULL.
#[no_mangle]
pub extern "C" fn thermoq_last_error_kind() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(k, _)| k.as_ptr()))
}

/// Parse a CP map from JSON (`{"dim_in", "dim_out", "kraus"}`).
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_from_json(json: *const c_char, out: *mut *mut ThermoqMap) -> ThermoqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let map: CPMap = parse(read_str(json)?, "cpmap")?;
        *out = Box::into_raw(Box::new(ThermoqMap(map)));
        Ok(())
    })
}

/// Build a CP map from `n_kraus` operators of shape `dim_out x dim_in`,
/// stored back to back as interleaved complex doubles.
///
/// # Safety
/// `data` must hold `2 * n_kraus * dim_out * dim_in` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_from_kraus(
    dim_in: usize,
    dim_out: usize,
    n_kraus: usize,
    data: *const f64,
    out: *mut *mut ThermoqMap,
) -> ThermoqStatus {
    guard(|| {
        if out.is_null() || data.is_null() {
            return Err(null());
        }
        if dim_in == 0 || dim_out == 0 || n_kraus == 0 {
            return Err(invalid("dimensions and Kraus count must be positive"));
        }
        let step = 2 * dim_in * dim_out;
        let kraus = (0..n_kraus).map(|k| read_matrix(data.add(k * step), dim_out, dim_in)).collect();
        let map = CPMap::new(dim_in, dim_out, kraus)?;
        *out = Box::into_raw(Box::new(ThermoqMap(map)));
        Ok(())
    })
}

/// # Safety
/// `map` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_free(map: *mut ThermoqMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Input and output dimensions.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_dims(
    map: *const ThermoqMap,
    dim_in: *mut usize,
    dim_out: *mut usize,
) -> ThermoqStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(null)?;
        if dim_in.is_null() || dim_out.is_null() {
            return Err(null());
        }
        *dim_in = m.0.dim_in();
        *dim_out = m.0.dim_out();
        Ok(())
    })
}

/// Apply the map to a `dim_in x dim_in` matrix, writing `dim_out x dim_out`.
///
/// # Safety
/// `input` holds `2*dim_in^2` doubles and `output` room for `2*dim_out^2`.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_apply(
    map: *const ThermoqMap,
    input: *const f64,
    output: *mut f64,
) -> ThermoqStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(null)?;
        if input.is_null() || output.is_null() {
            return Err(null());
        }
        let x = read_matrix(input, m.0.dim_in(), m.0.dim_in());
        let y = m.0.apply(&x)?;
        let o = std::slice::from_raw_parts_mut(output, 2 * y.nrows() * y.ncols());
        for r in 0..y.nrows() {
            for c in 0..y.ncols() {
                let k = 2 * (r * y.ncols() + c);
                o[k] = y[(r, c)].re;
                o[k + 1] = y[(r, c)].im;
            }
        }
        Ok(())
    })
}

/// Tier verdicts with certificates as JSON. `tol` may be NULL for defaults.
///
/// # Safety
/// `out` must be writable; free the result with `thermoq_string_free`.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_classify(
    map: *const ThermoqMap,
    tol: *const ThermoqTolerances,
    seed: u64,
    out: *mut *mut c_char,
) -> ThermoqStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let v = cli::classify_map_job(&m.0, &config(tol, seed)?)?;
        write_json(out, &v)
    })
}

/// Fixed-point structure report as JSON.
///
/// # Safety
/// As for `thermoq_map_classify`.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_decompose(
    map: *const ThermoqMap,
    tol: *const ThermoqTolerances,
    out: *mut *mut c_char,
) -> ThermoqStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let v = cli::decompose_job(&m.0, &config(tol, 0)?)?;
        write_json(out, &v)
    })
}

/// Decide whether a square map is rank non-decreasing.
///
/// # Safety
/// `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn thermoq_map_rank_nondecreasing(
    map: *const ThermoqMap,
    tol: *const ThermoqTolerances,
    seed: u64,
    verdict: *mut ThermoqVerdict,
) -> ThermoqStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(null)?;
        if verdict.is_null() {
            return Err(null());
        }
        let d = decide_rank_nondecreasing(&m.0, &config(tol, seed)?)?;
        *verdict = match d.verdict {
            Verdict::Yes => ThermoqVerdict::Yes,
            Verdict::No => ThermoqVerdict::No,
            Verdict::Inconclusive => ThermoqVerdict::Inconclusive,
        };
        Ok(())
    })
}

/// Parse an instrument from JSON (`{"labels", "operations"}`).
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn thermoq_instrument_from_json(
    json: *const c_char,
    out: *mut *mut ThermoqInstrument,
) -> ThermoqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let inst: Instrument = parse(read_str(json)?, "instrument")?;
        *out = Box::into_raw(Box::new(ThermoqInstrument(inst)));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn thermoq_instrument_free(inst: *mut ThermoqInstrument) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of outcomes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn thermoq_instrument_len(inst: *const ThermoqInstrument, len: *mut usize) -> ThermoqStatus {
    guard(|| {
        let i = inst.as_ref().ok_or_else(null)?;
        if len.is_null() {
            return Err(null());
        }
        *len = i.0.len();
        Ok(())
    })
}

/// Observable class, per-operation tiers and disturbance properties as JSON.
///
/// # Safety
/// `out` must be writable; free the result with `thermoq_string_free`.
#[no_mangle]
pub unsafe extern "C" fn thermoq_instrument_classify(
    inst: *const ThermoqInstrument,
    tol: *const ThermoqTolerances,
    seed: u64,
    out: *mut *mut c_char,
) -> ThermoqStatus {
    guard(|| {
        let i = inst.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let v = cli::classify_instrument_job(&i.0, &config(tol, seed)?)?;
        write_json(out, &v)
    })
}

/// Disturbance audit against the no-go implications as JSON.
///
/// # Safety
/// As for `thermoq_instrument_classify`.
#[no_mangle]
pub unsafe extern "C" fn thermoq_instrument_audit(
    inst: *const ThermoqInstrument,
    tol: *const ThermoqTolerances,
    seed: u64,
    out: *mut *mut c_char,
) -> ThermoqStatus {
    guard(|| {
        let i = inst.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let v = cli::audit_job(&i.0, &config(tol, seed)?)?;
        write_json(out, &v)
    })
}

/// Dilation process for an instrument as JSON; `strong != 0` requests the
/// rank non-decreasing construction.
///
/// # Safety
/// As for `thermoq_instrument_classify`.
#[no_mangle]
pub unsafe extern "C" fn thermoq_instrument_dilate(
    inst: *const ThermoqInstrument,
    strong: i32,
    tol: *const ThermoqTolerances,
    seed: u64,
    out: *mut *mut c_char,
) -> ThermoqStatus {
    guard(|| {
        let i = inst.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let v = cli::dilate_job(&i.0, strong != 0, &config(tol, seed)?)?;
        write_json(out, &v)
    })
}

/// # Safety
/// `s` must come from this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn thermoq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
