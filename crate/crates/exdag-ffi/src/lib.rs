//! C interface to the exact-real library: opaque expression handles,
//! integer status codes, no panic ever crosses the boundary.
//!
//! Handles are created by the constructors, shared structurally by the
//! operators (reusing a handle builds a DAG, not a copy), and released
//! with `ex_real_free`. Queries that can fail report an `ExStatus` and
//! write their result through an out pointer only on success.

use exdag::{EvalConfig, EvalError, Real, SepPolicy, Strategy};
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Opaque expression handle.
pub struct ExReal(Real);

/// Result of any fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument,
    /// A leaf was constructed from a NaN or infinite double.
    NonFiniteInput,
    /// A root index below 2 was requested.
    InvalidRootIndex,
    /// A divisor was decided to be exactly zero.
    DivisionByZero,
    /// An even root was taken of a value decided to be negative.
    NegativeRadicand,
    /// The sign loop hit its accuracy cap without separating the value
    /// from zero (possible only under `EX_SEP_POLICY_ASSUME_NONZERO`).
    Undecided,
    /// The algebraic-degree bound overflows; no separation bound exists.
    DegreeOverflow,
    /// Internal invariant violation or caught panic.
    Internal,
}

/// How sign decisions treat potential zeros.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExSepPolicy {
    /// Prove zeros with structural separation bounds.
    Prove = 0,
    /// Trust the caller that queried values and divisors are nonzero.
    AssumeNonzero = 1,
}

/// DAG restructuring strategy.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExStrategy {
    /// Leave the expression as built.
    None = 0,
    /// Balance associative chains.
    Balance = 1,
    /// Raise deep subterms to the root.
    Raise = 2,
    /// Raise, but keep divisions with more than `threshold` additions
    /// above them as evaluation barriers.
    RaiseBounded = 3,
}

fn status_of(e: &EvalError) -> ExStatus {
    match e {
        EvalError::DivisionByZero => ExStatus::DivisionByZero,
        EvalError::NegativeRadicand => ExStatus::NegativeRadicand,
        EvalError::NonFiniteInput => ExStatus::NonFiniteInput,
        EvalError::InvalidRootIndex(_) => ExStatus::InvalidRootIndex,
        EvalError::IterationLimit { .. } => ExStatus::Undecided,
        EvalError::DegreeOverflow => ExStatus::DegreeOverflow,
        EvalError::MissingMagnitudeBound => ExStatus::Internal,
    }
}

fn config(policy: ExSepPolicy, threads: u32) -> EvalConfig {
    EvalConfig {
        sep_policy: match policy {
            ExSepPolicy::Prove => SepPolicy::Bfmss,
            ExSepPolicy::AssumeNonzero => SepPolicy::AssumeNonzero,
        },
        threads: threads as usize,
    }
}

fn into_handle(r: Real) -> *mut ExReal {
    Box::into_raw(Box::new(ExReal(r)))
}

/// Shared borrow of a handle; None for null.
unsafe fn handle<'a>(p: *const ExReal) -> Option<&'a Real> {
    p.as_ref().map(|h| &h.0)
}

/// Runs a fallible body, turning panics into `Internal`.
fn guarded<F: FnOnce() -> ExStatus>(f: F) -> ExStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(ExStatus::Internal)
}

/// Runs a handle-producing body, turning panics into null.
fn guarded_handle<F: FnOnce() -> *mut ExReal>(f: F) -> *mut ExReal {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(ptr::null_mut())
}

// ---------------------------------------------------------------------------
// Construction

/// New leaf holding an exact integer.
#[no_mangle]
pub extern "C" fn ex_real_from_i64(v: i64) -> *mut ExReal {
    guarded_handle(|| into_handle(Real::from_i64(v)))
}

/// New leaf holding the exact value of a finite double.
#[no_mangle]
pub extern "C" fn ex_real_from_f64(v: f64, out: *mut *mut ExReal) -> ExStatus {
    guarded(|| {
        if out.is_null() {
            return ExStatus::NullArgument;
        }
        match Real::from_f64(v) {
            Ok(r) => {
                unsafe { *out = into_handle(r) };
                ExStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Shared borrows of two handles; None if either is null.
unsafe fn handles<'a>(a: *const ExReal, b: *const ExReal) -> Option<(&'a Real, &'a Real)> {
    Some((unsafe { handle(a) }?, unsafe { handle(b) }?))
}

/// Sum of two expressions. Null if either handle is null.
#[no_mangle]
pub extern "C" fn ex_real_add(a: *const ExReal, b: *const ExReal) -> *mut ExReal {
    guarded_handle(|| match unsafe { handles(a, b) } {
        Some((x, y)) => into_handle(x + y),
        None => ptr::null_mut(),
    })
}

/// Difference of two expressions. Null if either handle is null.
#[no_mangle]
pub extern "C" fn ex_real_sub(a: *const ExReal, b: *const ExReal) -> *mut ExReal {
    guarded_handle(|| match unsafe { handles(a, b) } {
        Some((x, y)) => into_handle(x - y),
        None => ptr::null_mut(),
    })
}

/// Product of two expressions. Null if either handle is null.
#[no_mangle]
pub extern "C" fn ex_real_mul(a: *const ExReal, b: *const ExReal) -> *mut ExReal {
    guarded_handle(|| match unsafe { handles(a, b) } {
        Some((x, y)) => into_handle(x * y),
        None => ptr::null_mut(),
    })
}

/// Quotient of two expressions. Construction always succeeds; division
/// by zero surfaces as a status when the value is queried.
#[no_mangle]
pub extern "C" fn ex_real_div(a: *const ExReal, b: *const ExReal) -> *mut ExReal {
    guarded_handle(|| match unsafe { handles(a, b) } {
        Some((x, y)) => into_handle(x / y),
        None => ptr::null_mut(),
    })
}

/// Negation. Null if the handle is null.
#[no_mangle]
pub extern "C" fn ex_real_neg(a: *const ExReal) -> *mut ExReal {
    guarded_handle(|| match unsafe { handle(a) } {
        Some(x) => into_handle(-x),
        None => ptr::null_mut(),
    })
}

/// Square root. A negative radicand surfaces as a status when queried.
#[no_mangle]
pub extern "C" fn ex_real_sqrt(a: *const ExReal) -> *mut ExReal {
    guarded_handle(|| match unsafe { handle(a) } {
        Some(x) => into_handle(x.sqrt()),
        None => ptr::null_mut(),
    })
}

/// k-th root, k >= 2.
#[no_mangle]
pub extern "C" fn ex_real_root(a: *const ExReal, k: u32, out: *mut *mut ExReal) -> ExStatus {
    guarded(|| {
        if out.is_null() {
            return ExStatus::NullArgument;
        }
        match unsafe { handle(a) } {
            None => ExStatus::NullArgument,
            Some(x) => match x.root(k) {
                Ok(r) => {
                    unsafe { *out = into_handle(r) };
                    ExStatus::Ok
                }
                Err(e) => status_of(&e),
            },
        }
    })
}

/// New handle to the same shared expression.
#[no_mangle]
pub extern "C" fn ex_real_clone(a: *const ExReal) -> *mut ExReal {
    guarded_handle(|| match unsafe { handle(a) } {
        Some(x) => into_handle(x.clone()),
        None => ptr::null_mut(),
    })
}

/// Releases a handle. Null is ignored.
#[no_mangle]
pub extern "C" fn ex_real_free(a: *mut ExReal) {
    if !a.is_null() {
        drop(unsafe { Box::from_raw(a) });
    }
}

// ---------------------------------------------------------------------------
// Queries

/// Exact sign of the expression: -1, 0 or +1 into `out_sign`.
#[no_mangle]
pub extern "C" fn ex_real_sign(
    a: *const ExReal,
    policy: ExSepPolicy,
    threads: u32,
    out_sign: *mut i32,
) -> ExStatus {
    guarded(|| {
        if out_sign.is_null() {
            return ExStatus::NullArgument;
        }
        match unsafe { handle(a) } {
            None => ExStatus::NullArgument,
            Some(x) => match x.sign_with(&config(policy, threads)) {
                Ok((s, _)) => {
                    unsafe { *out_sign = s as i32 };
                    ExStatus::Ok
                }
                Err(e) => status_of(&e),
            },
        }
    })
}

/// Approximates the value with absolute error at most 2^accuracy and
/// returns the nearest double below it in magnitude.
#[no_mangle]
pub extern "C" fn ex_real_approx_f64(
    a: *const ExReal,
    accuracy: i64,
    policy: ExSepPolicy,
    threads: u32,
    out: *mut f64,
) -> ExStatus {
    guarded(|| {
        if out.is_null() {
            return ExStatus::NullArgument;
        }
        match unsafe { handle(a) } {
            None => ExStatus::NullArgument,
            Some(x) => match x.approximate_with(accuracy, &config(policy, threads)) {
                Ok((ap, _)) => {
                    unsafe { *out = ap.value.to_f64_trunc() };
                    ExStatus::Ok
                }
                Err(e) => status_of(&e),
            },
        }
    })
}

/// Rewrites the expression in place; the value is preserved exactly.
/// `threshold` is read only by `EX_STRATEGY_RAISE_BOUNDED`.
#[no_mangle]
pub extern "C" fn ex_real_restructure(
    a: *const ExReal,
    strategy: ExStrategy,
    threshold: u64,
) -> ExStatus {
    guarded(|| match unsafe { handle(a) } {
        None => ExStatus::NullArgument,
        Some(x) => {
            let s = match strategy {
                ExStrategy::None => Strategy::Def,
                ExStrategy::Balance => Strategy::Amb,
                ExStrategy::Raise => Strategy::Mtr,
                ExStrategy::RaiseBounded => Strategy::MtrK(threshold),
            };
            x.restructure(s);
            ExStatus::Ok
        }
    })
}

/// Number of distinct nodes reachable from the handle; 0 for null.
#[no_mangle]
pub extern "C" fn ex_real_node_count(a: *const ExReal) -> u64 {
    catch_unwind(AssertUnwindSafe(|| match unsafe { handle(a) } {
        Some(x) => x.node_count(),
        None => 0,
    }))
    .unwrap_or(0)
}

/// Longest root-to-leaf path in edges; 0 for null.
#[no_mangle]
pub extern "C" fn ex_real_depth(a: *const ExReal) -> u64 {
    catch_unwind(AssertUnwindSafe(|| match unsafe { handle(a) } {
        Some(x) => x.depth(),
        None => 0,
    }))
    .unwrap_or(0)
}

/// Structure listing, one node per line, children before parents. The
/// returned string must be released with `ex_string_free`. Null on error.
#[no_mangle]
pub extern "C" fn ex_real_dump(a: *const ExReal) -> *mut c_char {
    catch_unwind(AssertUnwindSafe(|| match unsafe { handle(a) } {
        Some(x) => match CString::new(x.dump()) {
            Ok(s) => s.into_raw(),
            Err(_) => ptr::null_mut(),
        },
        None => ptr::null_mut(),
    }))
    .unwrap_or(ptr::null_mut())
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub extern "C" fn ex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
