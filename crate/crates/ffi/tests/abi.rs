use semiwalk_ffi::*;
use std::ffi::CStr;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sw_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(sw_version()) }.to_str().unwrap();
    assert!(v.starts_with(env!("CARGO_PKG_VERSION")), "{v}");
}

#[test]
fn gcd_of_half_integers() {
    let (b_num, b_den) = ([1i64, 3], [2i64, 2]);
    let (bt_num, bt_den) = ([2i64], [1i64]);
    let (mut n, mut d) = (0i64, 0i64);
    let s = unsafe { sw_gcd_of_support(b_num.as_ptr(), b_den.as_ptr(), 2, bt_num.as_ptr(), bt_den.as_ptr(), 1, &mut n, &mut d) };
    assert_eq!(s, SwStatus::Ok);
    assert_eq!((n, d), (1, 2));
}

#[test]
fn empty_negative_support_is_invalid() {
    let (b_num, b_den) = ([1i64], [1i64]);
    let (mut n, mut d) = (0i64, 0i64);
    let s = unsafe { sw_gcd_of_support(b_num.as_ptr(), b_den.as_ptr(), 1, ptr::null(), ptr::null(), 0, &mut n, &mut d) };
    assert_eq!(s, SwStatus::InvalidParameter);
    assert!(last_error().contains("gcd"), "{}", last_error());
}

#[test]
fn null_out_pointer_is_reported() {
    let s = unsafe { sw_gcd_of_support(ptr::null(), ptr::null(), 0, ptr::null(), ptr::null(), 0, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, SwStatus::NullPointer);
}

#[test]
fn pm_one_chain_ratios() {
    let (sizes, probs) = ([1u64], [1.0f64]);
    let mut sol = ptr::null_mut();
    let s = unsafe { sw_ck_solve(0.5, sizes.as_ptr(), probs.as_ptr(), 1, sizes.as_ptr(), probs.as_ptr(), 1, 500.0, &mut sol) };
    assert_eq!(s, SwStatus::Ok, "{}", last_error());
    unsafe {
        assert_eq!(sw_ck_converged(sol), 1);
        assert!(sw_ck_q_len(sol) > 10);
        let (mut q, mut e) = (0.0, 0.0);
        assert_eq!(sw_ck_q(sol, 0, &mut q, &mut e), SwStatus::Ok);
        assert!((q - 1.0).abs() < 1e-4);
        assert_eq!(sw_ck_q(sol, 5, &mut q, ptr::null_mut()), SwStatus::Ok);
        assert!((q - 2.0).abs() < 1e-4, "q_5 = {q}");
        assert_eq!(sw_ck_q(sol, 1 << 30, &mut q, ptr::null_mut()), SwStatus::InvalidParameter);
        sw_ck_free(sol);
        sw_ck_free(ptr::null_mut());
    }
}

#[test]
fn bad_pmf_is_rejected() {
    let (sizes, probs) = ([1u64], [0.7f64]);
    let mut sol = ptr::null_mut();
    let s = unsafe { sw_ck_solve(0.5, sizes.as_ptr(), probs.as_ptr(), 1, sizes.as_ptr(), probs.as_ptr(), 1, 10.0, &mut sol) };
    assert_eq!(s, SwStatus::InvalidParameter);
    assert!(sol.is_null());
}

fn pm_two_family() -> *mut SwFamily {
    let (num, den, p) = ([-2i64, 2], [1i64, 1], [0.5, 0.5]);
    let mut fam = ptr::null_mut();
    let s = unsafe { sw_family_lattice(num.as_ptr(), den.as_ptr(), p.as_ptr(), 2, 2, &mut fam) };
    assert_eq!(s, SwStatus::Ok, "{}", last_error());
    fam
}

#[test]
fn exact_and_monte_carlo_agree_for_simple_member() {
    let fam = pm_two_family();
    let (a_num, a_den) = ([1i64, 1], [1i64, 1]);
    let (mut r, mut err) = (0.0, 0.0);
    // Level 8 is K = 4 units of 2: (K+1)/(4K).
    let s = unsafe { sw_exact_nd(fam, a_num.as_ptr(), a_den.as_ptr(), 8, 1, &mut r, &mut err) };
    assert_eq!(s, SwStatus::Ok, "{}", last_error());
    assert!((r - 5.0 / 16.0).abs() < 1e-12, "{r}");
    let (mut v, mut se) = (0.0, 0.0);
    let s = unsafe { sw_estimate_outward(fam, a_num.as_ptr(), a_den.as_ptr(), 8, 1, 20_000, 9, &mut v, &mut se) };
    assert_eq!(s, SwStatus::Ok, "{}", last_error());
    assert!((v - r).abs() < 4.0 * se + 1e-9, "{v} ± {se} vs {r}");
    unsafe { sw_family_free(fam) };
}

#[test]
fn odd_level_has_no_composition() {
    let fam = pm_two_family();
    let (a_num, a_den) = ([1i64, 1], [1i64, 1]);
    let mut r = 0.0;
    let s = unsafe { sw_exact_nd(fam, a_num.as_ptr(), a_den.as_ptr(), 3, 1, &mut r, ptr::null_mut()) };
    assert_eq!(s, SwStatus::NoComposition);
    assert!(!last_error().is_empty());
    unsafe { sw_family_free(fam) };
}

#[test]
fn zero_denominator_is_invalid() {
    let fam = pm_two_family();
    let (a_num, a_den) = ([1i64, 1], [0i64, 1]);
    let mut r = 0.0;
    let s = unsafe { sw_exact_nd(fam, a_num.as_ptr(), a_den.as_ptr(), 8, 1, &mut r, ptr::null_mut()) };
    assert_eq!(s, SwStatus::InvalidParameter);
    unsafe { sw_family_free(fam) };
}
