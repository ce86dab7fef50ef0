//! C ABI over `prodrel`.
//!
//! Objects are opaque handles released with their `_free` function.
//! Every fallible call returns a [`PrStatus`] code and writes its result
//! through an out-pointer; on failure `pr_last_error` describes the most
//! recent error on the calling thread. Rationals cross the boundary as
//! `"p/q"` strings, vectors as space-separated lists of them. Strings
//! returned by the library are released with `pr_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use prodrel::cfl::{
    first_gap_above_one, gap_table, make_instance, parse_set, verify_pair, PairOptions,
};
use prodrel::exactlp::{contains, fmt_rat, parse_rat, project_onto, solve_lp};
use prodrel::sa::{sa_lift, sa_project};
use prodrel::{Error, HPolyhedron, LpResult, LpStatus, Rational, Sense};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidUtf8 = -2,
    Parse = -3,
    Input = -4,
    Capacity = -5,
    /// A precondition, validity or feasibility check failed.
    Check = -6,
    Panic = -255,
}

/// An H-polyhedron `{x : Ax <= b, Cx == d}` over named variables.
pub struct PrPoly(HPolyhedron);

/// Outcome of an exact LP solve.
pub struct PrLpResult(LpResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> PrStatus {
    match e {
        Error::Parse { .. } => PrStatus::Parse,
        Error::Capacity(_) => PrStatus::Capacity,
        Error::Precondition(_) | Error::Validity(_) | Error::Infeasible(_) | Error::Section(_) => {
            PrStatus::Check
        }
        Error::Dimension(_) | Error::UnknownVariable(_) | Error::Input(_) => PrStatus::Input,
    }
}

struct Fail(PrStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail(status_of(&e))
    }
}

fn fail<T>(status: PrStatus, msg: &str) -> Result<T, Fail> {
    set_error(msg);
    Err(Fail(status))
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PrStatus::Ok
        }
        Ok(Err(Fail(s))) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PrStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return fail(PrStatus::NullPointer, "null string argument");
    }
    match CStr::from_ptr(s).to_str() {
        Ok(t) => Ok(t),
        Err(_) => fail(PrStatus::InvalidUtf8, "string argument is not UTF-8"),
    }
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(PrStatus::NullPointer, "null handle"),
    }
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return fail(PrStatus::NullPointer, "null output pointer");
    }
    out.write(v);
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn rationals(s: &str) -> Result<Vec<Rational>, Fail> {
    s.split_whitespace()
        .map(|t| {
            parse_rat(t).map_or_else(|| fail(PrStatus::Parse, &format!("bad number `{t}`")), Ok)
        })
        .collect()
}

fn join(v: &[Rational]) -> String {
    v.iter().map(fmt_rat).collect::<Vec<_>>().join(" ")
}

/// Message for the last failed call on this thread, or NULL. Free with
/// `pr_string_free`.
#[no_mangle]
pub extern "C" fn pr_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |s| s.clone().into_raw())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static; do not free.
#[no_mangle]
pub extern "C" fn pr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses the text format: a `vars:` header, then rows `c1 … cn <= b` or
/// `c1 … cn == b`.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_poly_parse(src: *const c_char, out: *mut *mut PrPoly) -> PrStatus {
    guard(|| {
        let p = HPolyhedron::parse(text(src)?)?;
        put(out, Box::into_raw(Box::new(PrPoly(p))))
    })
}

/// # Safety
/// `p` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_poly_free(p: *mut PrPoly) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_poly_dim(p: *const PrPoly, out: *mut usize) -> PrStatus {
    guard(|| put(out, handle(p)?.0.dim()))
}

/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_poly_num_rows(p: *const PrPoly, out: *mut usize) -> PrStatus {
    guard(|| put(out, handle(p)?.0.num_rows()))
}

/// The polyhedron in the text format accepted by `pr_poly_parse`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_poly_to_string(p: *const PrPoly, out: *mut *mut c_char) -> PrStatus {
    guard(|| put(out, c_string(handle(p)?.0.to_string())))
}

/// Whether `inner ⊆ outer` (same variables, same order).
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_poly_contains(
    outer: *const PrPoly,
    inner: *const PrPoly,
    out: *mut bool,
) -> PrStatus {
    guard(|| put(out, contains(&handle(outer)?.0, &handle(inner)?.0)?))
}

/// Projection onto the space-separated variables `keep`.
///
/// # Safety
/// `p` must be a live handle, `keep` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pr_poly_project(
    p: *const PrPoly,
    keep: *const c_char,
    out: *mut *mut PrPoly,
) -> PrStatus {
    guard(|| {
        let names: Vec<String> = text(keep)?.split_whitespace().map(String::from).collect();
        let q = project_onto(&handle(p)?.0, &names)?;
        put(out, Box::into_raw(Box::new(PrPoly(q))))
    })
}

/// Level-`level` Sherali-Adams closure with respect to the space-separated
/// 0/1 variables `integer_vars`, projected back to the original variables.
///
/// # Safety
/// `p` must be a live handle, `integer_vars` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pr_sa_closure(
    p: *const PrPoly,
    integer_vars: *const c_char,
    level: usize,
    out: *mut *mut PrPoly,
) -> PrStatus {
    guard(|| {
        let ints: Vec<String> = text(integer_vars)?
            .split_whitespace()
            .map(String::from)
            .collect();
        let lifted = sa_lift(&handle(p)?.0, &ints, level)?;
        let q = sa_project(&lifted)?;
        put(out, Box::into_raw(Box::new(PrPoly(q))))
    })
}

/// Optimizes the space-separated rational `objective` over `p`;
/// `maximize` selects the sense.
///
/// # Safety
/// `p` must be a live handle, `objective` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pr_lp_solve(
    p: *const PrPoly,
    objective: *const c_char,
    maximize: bool,
    out: *mut *mut PrLpResult,
) -> PrStatus {
    guard(|| {
        let c = rationals(text(objective)?)?;
        let sense = if maximize { Sense::Max } else { Sense::Min };
        let r = solve_lp(&handle(p)?.0, &c, sense)?;
        put(out, Box::into_raw(Box::new(PrLpResult(r))))
    })
}

/// # Safety
/// `r` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_lp_free(r: *mut PrLpResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// 0 optimal, 1 infeasible, 2 unbounded.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_lp_status(r: *const PrLpResult, out: *mut i32) -> PrStatus {
    guard(|| {
        let s = match handle(r)?.0.status {
            LpStatus::Optimal => 0,
            LpStatus::Infeasible => 1,
            LpStatus::Unbounded => 2,
        };
        put(out, s)
    })
}

/// Optimal value; an input error unless the status is optimal.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_lp_objective(r: *const PrLpResult, out: *mut *mut c_char) -> PrStatus {
    guard(|| match &handle(r)?.0.objective {
        Some(v) => put(out, c_string(fmt_rat(v))),
        None => fail(PrStatus::Input, "no optimal value"),
    })
}

/// Optimal or feasible point, when there is one.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_lp_point(r: *const PrLpResult, out: *mut *mut c_char) -> PrStatus {
    guard(|| match &handle(r)?.0.point {
        Some(v) => put(out, c_string(join(v))),
        None => fail(PrStatus::Input, "no point"),
    })
}

/// Dual row multipliers at an optimum, row multipliers proving
/// infeasibility, or an improving ray.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_lp_certificate(
    r: *const PrLpResult,
    out: *mut *mut c_char,
) -> PrStatus {
    guard(|| match &handle(r)?.0.certificate {
        Some(v) => put(out, c_string(join(v))),
        None => fail(PrStatus::Input, "no certificate"),
    })
}

/// Exact fractional cost and gap ratio of the facility location family
/// for `from ≤ n ≤ to`, as CSV `n,frac_cost,ratio`. `first_above_one`
/// receives the first `n` with ratio above 1, or 0.
///
/// # Safety
/// `out` and `first_above_one` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_cfl_gap_table(
    from: usize,
    to: usize,
    out: *mut *mut c_char,
    first_above_one: *mut usize,
) -> PrStatus {
    guard(|| {
        if from > to {
            return fail(PrStatus::Input, "empty range");
        }
        let rows = gap_table(from, to);
        let mut s = String::from("n,frac_cost,ratio\n");
        for r in &rows {
            s += &format!("{},{},{}\n", r.n, fmt_rat(&r.frac_cost), fmt_rat(&r.ratio));
        }
        put(first_above_one, first_gap_above_one(&rows).unwrap_or(0))?;
        put(out, c_string(s))
    })
}

/// Runs every pair check for core members `l`, `lp` (1-based sets such as
/// `"{6,7,8,9,10}"`) at size `n`. `passed` receives the verdict and
/// `report` the JSON report.
///
/// # Safety
/// `l` and `lp` must be NUL-terminated; `passed` and `report` writable.
#[no_mangle]
pub unsafe extern "C" fn pr_cfl_verify_pair(
    n: usize,
    l: *const c_char,
    lp: *const c_char,
    seed: u64,
    passed: *mut bool,
    report: *mut *mut c_char,
) -> PrStatus {
    guard(|| {
        let inst = make_instance(n)?;
        let l = parse_set(text(l)?)?;
        let lp = parse_set(text(lp)?)?;
        let r = verify_pair(&inst, l, lp, &PairOptions::standard(&inst, seed))?;
        put(passed, r.passed())?;
        put(report, c_string(r.to_json().to_string()))
    })
}
