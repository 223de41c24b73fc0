//! C ABI over `lindiv`.
//!
//! Every fallible call returns a [`LindivStatus`]. On failure the message is
//! kept per thread and can be read with [`lindiv_last_error`]. Strings handed
//! out by the library must be released with [`lindiv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lindiv::divergence::{DivergenceParams, Extended, Strategy, DEFAULT_BOUND_MULTIPLIER};
use lindiv::family::{Family, FamilySpec, WitnessOptions};
use lindiv::space::{Limits, Rational};
use lindiv::Error;

/// Opaque handle to a marked space.
pub struct LindivFamily {
    inner: Family,
    spec: FamilySpec,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LindivStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    Unsupported = 5,
    BudgetExceeded = 6,
    /// The divergence value is infinite; the output is left untouched.
    Infinite = 7,
    Internal = 8,
    Panic = 9,
}

/// Sentinel for "use the library default" in `bfs_cap` arguments.
pub const LINDIV_DEFAULT_CAP: u64 = 0;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> LindivStatus {
    match e {
        Error::Parse(_) => LindivStatus::Parse,
        Error::InvalidInput(_) | Error::DomainGap(_) | Error::WrongBase => LindivStatus::InvalidInput,
        Error::UnsupportedParams(_) => LindivStatus::Unsupported,
        Error::BudgetExceeded { .. } => LindivStatus::BudgetExceeded,
        _ => LindivStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), LindivStatus>) -> LindivStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LindivStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside lindiv");
            LindivStatus::Panic
        }
    }
}

fn fail(e: Error) -> LindivStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, LindivStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(LindivStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        LindivStatus::InvalidUtf8
    })
}

unsafe fn family_arg<'a>(f: *const LindivFamily) -> Result<&'a LindivFamily, LindivStatus> {
    f.as_ref().ok_or_else(|| {
        set_error("family handle is null");
        LindivStatus::NullPointer
    })
}

fn out_arg<T>(p: *mut T) -> Result<(), LindivStatus> {
    if p.is_null() {
        set_error("output pointer is null");
        return Err(LindivStatus::NullPointer);
    }
    Ok(())
}

fn limits(cap: u64) -> Limits {
    if cap == LINDIV_DEFAULT_CAP {
        Limits::default()
    } else {
        Limits::with_cap(usize::try_from(cap).unwrap_or(usize::MAX))
    }
}

fn to_c_string(s: String) -> Result<*mut c_char, LindivStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        set_error("output contains a NUL byte");
        LindivStatus::Internal
    })
}

/// Build a space from a spec such as `"dl:p=2,q=3"` or `"lamplighter"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lindiv_family_new(spec: *const c_char, out: *mut *mut LindivFamily) -> LindivStatus {
    guard(|| {
        out_arg(out)?;
        let spec: FamilySpec = str_arg(spec, "spec")?.parse().map_err(fail)?;
        let inner = spec.build().map_err(fail)?;
        *out = Box::into_raw(Box::new(LindivFamily { inner, spec }));
        Ok(())
    })
}

/// # Safety
/// `f` must come from [`lindiv_family_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lindiv_family_free(f: *mut LindivFamily) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Canonical spec string of a handle. Free with [`lindiv_string_free`].
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lindiv_family_spec(f: *const LindivFamily, out: *mut *mut c_char) -> LindivStatus {
    guard(|| {
        out_arg(out)?;
        let f = family_arg(f)?;
        *out = to_c_string(f.spec.to_string())?;
        Ok(())
    })
}

/// Word norm: closed form where the family has one, BFS otherwise.
///
/// # Safety
/// `f` must be a live handle, `word` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lindiv_norm(
    f: *const LindivFamily,
    word: *const c_char,
    bfs_cap: u64,
    out: *mut u64,
) -> LindivStatus {
    guard(|| {
        out_arg(out)?;
        let f = family_arg(f)?;
        let rep = f.inner.norm(str_arg(word, "word")?, limits(bfs_cap)).map_err(fail)?;
        *out = rep.norm;
        Ok(())
    })
}

/// Lower bound on the norm that never searches.
///
/// # Safety
/// As for [`lindiv_norm`].
#[no_mangle]
pub unsafe extern "C" fn lindiv_certificate(
    f: *const LindivFamily,
    word: *const c_char,
    out: *mut u64,
) -> LindivStatus {
    guard(|| {
        out_arg(out)?;
        let f = family_arg(f)?;
        *out = f.inner.certificate(str_arg(word, "word")?).map_err(fail)?;
        Ok(())
    })
}

/// Witness path for the element `word` spells, as a JSON object.
/// With `verify` set the object carries a verification report.
///
/// # Safety
/// `f` must be a live handle, `word` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lindiv_witness_json(
    f: *const LindivFamily,
    word: *const c_char,
    verify: bool,
    bfs_cap: u64,
    out: *mut *mut c_char,
) -> LindivStatus {
    guard(|| {
        out_arg(out)?;
        let f = family_arg(f)?;
        let opts = WitnessOptions { verify, ..Default::default() };
        let w = f.inner.witness(str_arg(word, "word")?, opts, limits(bfs_cap)).map_err(fail)?;
        let json = serde_json::to_string(&w).map_err(|e| fail(Error::Invariant(e.to_string())))?;
        *out = to_c_string(json)?;
        Ok(())
    })
}

/// Exhaustive `DIV'(n, delta, gamma)` with `delta = delta_num/delta_den` and
/// `gamma = gamma_num/gamma_den`. Returns [`LindivStatus::Infinite`] when
/// some pair has no detour.
///
/// # Safety
/// `f` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lindiv_divergence(
    f: *const LindivFamily,
    n: u64,
    delta_num: i64,
    delta_den: i64,
    gamma_num: i64,
    gamma_den: i64,
    bfs_cap: u64,
    out: *mut u64,
) -> LindivStatus {
    let mut infinite = false;
    let s = guard(|| {
        out_arg(out)?;
        let f = family_arg(f)?;
        if delta_den == 0 || gamma_den == 0 {
            return Err(fail(Error::InvalidInput("zero denominator".into())));
        }
        let params = DivergenceParams::new(Rational::new(delta_num, delta_den), Rational::new(gamma_num, gamma_den))
            .map_err(fail)?;
        let sample = f
            .inner
            .profile(n, params, Strategy::Exhaustive, DEFAULT_BOUND_MULTIPLIER, limits(bfs_cap))
            .map_err(fail)?;
        match sample.value {
            Extended::Finite(v) => *out = v,
            Extended::Infinite => infinite = true,
        }
        Ok(())
    });
    if s == LindivStatus::Ok && infinite {
        LindivStatus::Infinite
    } else {
        s
    }
}

/// Message for the last failed call on this thread, or null. Owned by the
/// library and valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn lindiv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lindiv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static version string.
#[no_mangle]
pub extern "C" fn lindiv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
