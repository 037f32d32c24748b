//! C ABI over `semiwalk`.
//!
//! Conventions:
//! - every fallible call returns an [`SwStatus`]; results go through out-pointers,
//! - on failure the message is kept per thread and read with [`sw_last_error`],
//! - handles are opaque and owned by the caller until passed to their `_free`,
//! - rationals cross the boundary as `(numerator, denominator)` pairs of `int64_t`.

use num_rational::Rational64;
use semiwalk::analysis::conditional::{estimate_conditional_outward, LadderOptions};
use semiwalk::analysis::exact_nd::{exact_nd, NdMode, NdOptions};
use semiwalk::ck_solver::{gcd_of_support, integrate_ck, CkOptions, CkSolution, CkSystem};
use semiwalk::families::{BaseDistribution, FamilyParameter, LatticeLaw, ScaledFamily};
use semiwalk::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Outcome of a call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ContractViolation = 3,
    Unsupported = 4,
    NotConverged = 5,
    NoComposition = 6,
    CostExceeded = 7,
    InsufficientData = 8,
    Internal = 9,
}

fn status_of(e: &Error) -> SwStatus {
    match e {
        Error::InvalidParameter(_) | Error::DegenerateSplit | Error::Config(_) | Error::UndefinedGcd => SwStatus::InvalidParameter,
        Error::ContractViolation(_) => SwStatus::ContractViolation,
        Error::Unsupported(_) => SwStatus::Unsupported,
        Error::Unconverged(_) | Error::TruncationTooSmall { .. } | Error::P0Underflow(_) => SwStatus::NotConverged,
        Error::NoComposition(_) => SwStatus::NoComposition,
        Error::CostExceeded { .. } => SwStatus::CostExceeded,
        Error::InsufficientData(_) => SwStatus::InsufficientData,
        Error::Io(_) => SwStatus::Internal,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, recording the error message and converting panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), (SwStatus, String)>) -> SwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SwStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            SwStatus::Internal
        }
    }
}

fn lib(e: Error) -> (SwStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (SwStatus, String) {
    (SwStatus::NullPointer, format!("{name} is null"))
}

/// # Safety
/// `ptr` must be null only if `n == 0`; otherwise it must point to `n` readable values.
unsafe fn slice<'a, T>(ptr: *const T, n: usize, name: &str) -> Result<&'a [T], (SwStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, n))
}

fn rationals(num: &[i64], den: &[i64]) -> Result<Vec<Rational64>, (SwStatus, String)> {
    num.iter()
        .zip(den)
        .map(|(&n, &d)| {
            if d == 0 {
                Err((SwStatus::InvalidParameter, "zero denominator".to_string()))
            } else {
                Ok(Rational64::new(n, d))
            }
        })
        .collect()
}

/// Version string; static, never free it.
#[no_mangle]
pub extern "C" fn sw_version() -> *const c_char {
    static V: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    V.get_or_init(|| CString::new(semiwalk::version()).unwrap_or_default()).as_ptr()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `gcd` of the positive support of `B` and `B̃`.
///
/// # Safety
/// Each array must hold its stated count of values; `out_num` and `out_den` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sw_gcd_of_support(
    b_num: *const i64,
    b_den: *const i64,
    nb: usize,
    bt_num: *const i64,
    bt_den: *const i64,
    nbt: usize,
    out_num: *mut i64,
    out_den: *mut i64,
) -> SwStatus {
    guard(|| {
        if out_num.is_null() || out_den.is_null() {
            return Err(null("out"));
        }
        let b = rationals(slice(b_num, nb, "b_num")?, slice(b_den, nb, "b_den")?)?;
        let bt = rationals(slice(bt_num, nbt, "bt_num")?, slice(bt_den, nbt, "bt_den")?)?;
        let g = gcd_of_support(&b, &bt).map_err(lib)?;
        *out_num = *g.numer();
        *out_den = *g.denom();
        Ok(())
    })
}

/// Integrated Chapman–Kolmogorov system with its occupancy ratios.
pub struct SwCkSolution {
    inner: CkSolution,
}

/// Integrates the system with positive sizes `r_sizes` (probabilities `r_probs`),
/// negative sizes `rt_sizes` (probabilities `rt_probs`) and sign probability `p_plus`
/// up to `t_end`; sizes are in lattice units.
///
/// # Safety
/// Arrays must hold their stated counts; `out` must be writable. Free the result with [`sw_ck_free`].
#[no_mangle]
pub unsafe extern "C" fn sw_ck_solve(
    p_plus: f64,
    r_sizes: *const u64,
    r_probs: *const f64,
    nr: usize,
    rt_sizes: *const u64,
    rt_probs: *const f64,
    nrt: usize,
    t_end: f64,
    out: *mut *mut SwCkSolution,
) -> SwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let zip = |s: &[u64], p: &[f64]| s.iter().zip(p).map(|(&s, &p)| (s as usize, p)).collect::<Vec<_>>();
        let r = zip(slice(r_sizes, nr, "r_sizes")?, slice(r_probs, nr, "r_probs")?);
        let rt = zip(slice(rt_sizes, nrt, "rt_sizes")?, slice(rt_probs, nrt, "rt_probs")?);
        let sys = CkSystem::new(p_plus, r, rt).map_err(lib)?;
        let opts = CkOptions { t_end, ..CkOptions::default() };
        let inner = integrate_ck(&sys, &opts).map_err(lib)?;
        *out = Box::into_raw(Box::new(SwCkSolution { inner }));
        Ok(())
    })
}

/// Number of extracted ratios `q_0..q_{len-1}`; 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle from [`sw_ck_solve`].
#[no_mangle]
pub unsafe extern "C" fn sw_ck_q_len(sol: *const SwCkSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.inner.q.len())
}

/// Ratio `q_n` and its extraction error.
///
/// # Safety
/// `sol` must be a live handle; `out_q` must be writable; `out_err` may be null.
#[no_mangle]
pub unsafe extern "C" fn sw_ck_q(sol: *const SwCkSolution, n: usize, out_q: *mut f64, out_err: *mut f64) -> SwStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("sol"))?;
        if out_q.is_null() {
            return Err(null("out_q"));
        }
        let q = *s.inner.q.get(n).ok_or((SwStatus::InvalidParameter, format!("n = {n} beyond {}", s.inner.q.len())))?;
        *out_q = q;
        if !out_err.is_null() {
            *out_err = s.inner.q_error.get(n).copied().unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// 1 when the ratios reached a plateau, 0 otherwise or for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sw_ck_converged(sol: *const SwCkSolution) -> i32 {
    sol.as_ref().map_or(0, |s| s.inner.converged as i32)
}

/// # Safety
/// `sol` must be null or a handle from [`sw_ck_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sw_ck_free(sol: *mut SwCkSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Scaled lattice family `F(x / a_i)` in `dim` coordinates.
pub struct SwFamily {
    inner: ScaledFamily,
}

/// Builds a family from the base atoms `values[k] = val_num[k] / val_den[k]` with masses `probs[k]`.
///
/// # Safety
/// Arrays must hold `n` values; `out` must be writable. Free with [`sw_family_free`].
#[no_mangle]
pub unsafe extern "C" fn sw_family_lattice(
    val_num: *const i64,
    val_den: *const i64,
    probs: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut SwFamily,
) -> SwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let v = rationals(slice(val_num, n, "val_num")?, slice(val_den, n, "val_den")?)?;
        let p = slice(probs, n, "probs")?;
        let pairs: Vec<(Rational64, f64)> = v.into_iter().zip(p.iter().copied()).collect();
        let law = LatticeLaw::from_values(&pairs).map_err(lib)?;
        let inner = ScaledFamily::new(BaseDistribution::Lattice(law), dim).map_err(lib)?;
        *out = Box::into_raw(Box::new(SwFamily { inner }));
        Ok(())
    })
}

/// # Safety
/// `fam` must be null or a handle from [`sw_family_lattice`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sw_family_free(fam: *mut SwFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

unsafe fn parameter(fam: &SwFamily, a_num: *const i64, a_den: *const i64) -> Result<FamilyParameter, (SwStatus, String)> {
    let d = fam.inner.dim;
    let a = rationals(slice(a_num, d, "a_num")?, slice(a_den, d, "a_den")?)?;
    FamilyParameter::exact(a).map_err(lib)
}

/// Exact conditional outward-step probability of member `a` at norm level `z`.
///
/// # Safety
/// `fam` must be live; `a_num`/`a_den` must hold `dim` values; `out_ratio` must be writable;
/// `out_err` may be null.
#[no_mangle]
pub unsafe extern "C" fn sw_exact_nd(
    fam: *const SwFamily,
    a_num: *const i64,
    a_den: *const i64,
    z_num: i64,
    z_den: i64,
    out_ratio: *mut f64,
    out_err: *mut f64,
) -> SwStatus {
    guard(|| {
        let f = fam.as_ref().ok_or_else(|| null("fam"))?;
        if out_ratio.is_null() {
            return Err(null("out_ratio"));
        }
        let a = parameter(f, a_num, a_den)?;
        let z = rationals(&[z_num], &[z_den])?[0];
        let member = f.inner.member(&a).map_err(lib)?;
        let mode = if a.is_simple() { NdMode::Simple } else { NdMode::Regular };
        let r = exact_nd(&member, z, mode, &NdOptions::default()).map_err(lib)?;
        *out_ratio = r.ratio;
        if !out_err.is_null() {
            *out_err = r.numerical_error;
        }
        Ok(())
    })
}

/// Monte Carlo estimate of the same probability from `paths` plain-walk paths
/// over the default horizon ladder.
///
/// # Safety
/// As [`sw_exact_nd`]; `out_value` must be writable and `out_stderr` may be null.
#[no_mangle]
pub unsafe extern "C" fn sw_estimate_outward(
    fam: *const SwFamily,
    a_num: *const i64,
    a_den: *const i64,
    z_num: i64,
    z_den: i64,
    paths: u64,
    seed: u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> SwStatus {
    guard(|| {
        let f = fam.as_ref().ok_or_else(|| null("fam"))?;
        if out_value.is_null() {
            return Err(null("out_value"));
        }
        let a = parameter(f, a_num, a_den)?;
        let z = rationals(&[z_num], &[z_den])?[0];
        let member = f.inner.member(&a).map_err(lib)?;
        let opts = LadderOptions { paths, seed, ..LadderOptions::default() };
        let est = estimate_conditional_outward(&member, z, &opts).map_err(lib)?;
        *out_value = est.estimate.value;
        if !out_stderr.is_null() {
            *out_stderr = est.estimate.stderr;
        }
        Ok(())
    })
}
