//! Exercises the C surface the way a C caller would: raw handles, status
//! codes, explicit frees.

use exdag_ffi::*;
use std::ffi::CStr;
use std::ptr;

fn approx(h: *const ExReal) -> f64 {
    let mut out = 0.0;
    let st = ex_real_approx_f64(h, -60, ExSepPolicy::Prove, 1, &mut out);
    assert_eq!(st, ExStatus::Ok);
    out
}

#[test]
fn arithmetic_roundtrip() {
    let two = ex_real_from_i64(2);
    let three = ex_real_from_i64(3);
    let four = ex_real_from_i64(4);
    let twenty = ex_real_from_i64(20);
    let five = ex_real_from_i64(5);

    let sum = ex_real_add(two, three);
    let prod = ex_real_mul(sum, four);
    let quot = ex_real_div(twenty, five);
    let result = ex_real_sub(prod, quot);

    assert_eq!(approx(result), 16.0);

    for h in [two, three, four, twenty, five, sum, prod, quot, result] {
        ex_real_free(h);
    }
}

#[test]
fn reusing_a_handle_shares_structure() {
    let two = ex_real_from_i64(2);
    let s = ex_real_sqrt(two);
    let shared = ex_real_mul(s, s);
    assert_eq!(ex_real_node_count(shared), 3);
    assert_eq!(ex_real_depth(shared), 2);

    let two2 = ex_real_from_i64(2);
    let s2 = ex_real_sqrt(two2);
    let separate = ex_real_mul(s, s2);
    assert_eq!(ex_real_node_count(separate), 5);

    for h in [two, s, shared, two2, s2, separate] {
        ex_real_free(h);
    }
}

#[test]
fn proven_zero_sign() {
    let two = ex_real_from_i64(2);
    let s = ex_real_sqrt(two);
    let sq = ex_real_mul(s, s);
    let z = ex_real_sub(sq, two);

    let mut sign = 7;
    assert_eq!(ex_real_sign(z, ExSepPolicy::Prove, 1, &mut sign), ExStatus::Ok);
    assert_eq!(sign, 0);

    for h in [two, s, sq, z] {
        ex_real_free(h);
    }
}

#[test]
fn assumed_nonzero_zero_reports_undecided() {
    let two = ex_real_from_i64(2);
    let s = ex_real_sqrt(two);
    let sq = ex_real_mul(s, s);
    let z = ex_real_sub(sq, two);

    let mut sign = 7;
    let st = ex_real_sign(z, ExSepPolicy::AssumeNonzero, 1, &mut sign);
    assert_eq!(st, ExStatus::Undecided);
    assert_eq!(sign, 7, "out value untouched on failure");

    for h in [two, s, sq, z] {
        ex_real_free(h);
    }
}

#[test]
fn division_by_zero_surfaces_on_query() {
    let one = ex_real_from_i64(1);
    let two = ex_real_from_i64(2);
    let two_again = ex_real_clone(two);
    let zero = ex_real_sub(two, two_again);
    let q = ex_real_div(one, zero);

    let mut out = 0.0;
    let st = ex_real_approx_f64(q, -10, ExSepPolicy::Prove, 1, &mut out);
    assert_eq!(st, ExStatus::DivisionByZero);

    for h in [one, two, two_again, zero, q] {
        ex_real_free(h);
    }
}

#[test]
fn negative_radicand_surfaces_on_query() {
    let one = ex_real_from_i64(1);
    let two = ex_real_from_i64(2);
    let neg = ex_real_sub(one, two);
    let s = ex_real_sqrt(neg);

    let mut sign = 0;
    assert_eq!(
        ex_real_sign(s, ExSepPolicy::Prove, 1, &mut sign),
        ExStatus::NegativeRadicand
    );

    for h in [one, two, neg, s] {
        ex_real_free(h);
    }
}

#[test]
fn invalid_root_index_is_rejected() {
    let two = ex_real_from_i64(2);
    let mut out: *mut ExReal = ptr::null_mut();
    assert_eq!(ex_real_root(two, 1, &mut out), ExStatus::InvalidRootIndex);
    assert!(out.is_null());
    assert_eq!(ex_real_root(two, 3, &mut out), ExStatus::Ok);
    assert!(!out.is_null());
    ex_real_free(out);
    ex_real_free(two);
}

#[test]
fn non_finite_leaf_is_rejected() {
    let mut out: *mut ExReal = ptr::null_mut();
    assert_eq!(ex_real_from_f64(f64::NAN, &mut out), ExStatus::NonFiniteInput);
    assert!(out.is_null());
    assert_eq!(ex_real_from_f64(0.1, &mut out), ExStatus::Ok);
    assert!(!out.is_null());
    ex_real_free(out);
}

#[test]
fn null_arguments_are_harmless() {
    assert!(ex_real_add(ptr::null(), ptr::null()).is_null());
    assert!(ex_real_sqrt(ptr::null()).is_null());
    assert!(ex_real_clone(ptr::null()).is_null());
    assert!(ex_real_dump(ptr::null()).is_null());
    assert_eq!(ex_real_node_count(ptr::null()), 0);
    assert_eq!(ex_real_depth(ptr::null()), 0);

    let mut sign = 0;
    assert_eq!(
        ex_real_sign(ptr::null(), ExSepPolicy::Prove, 1, &mut sign),
        ExStatus::NullArgument
    );
    let two = ex_real_from_i64(2);
    assert_eq!(
        ex_real_sign(two, ExSepPolicy::Prove, 1, ptr::null_mut()),
        ExStatus::NullArgument
    );
    ex_real_free(two);
    ex_real_free(ptr::null_mut());
    ex_string_free(ptr::null_mut());
}

#[test]
fn restructure_preserves_value_and_reports_shape() {
    let mut chain = ex_real_from_i64(1);
    for i in 2..=64 {
        let leaf = ex_real_from_i64(i);
        let next = ex_real_add(chain, leaf);
        ex_real_free(chain);
        ex_real_free(leaf);
        chain = next;
    }
    let depth_before = ex_real_depth(chain);
    assert_eq!(ex_real_restructure(chain, ExStrategy::Balance, 0), ExStatus::Ok);
    let depth_after = ex_real_depth(chain);
    assert!(depth_after < depth_before);
    assert_eq!(approx(chain), 2080.0);

    assert_eq!(ex_real_restructure(chain, ExStrategy::Raise, 0), ExStatus::Ok);
    assert_eq!(approx(chain), 2080.0);
    assert_eq!(
        ex_real_restructure(ptr::null(), ExStrategy::Raise, 0),
        ExStatus::NullArgument
    );
    ex_real_free(chain);
}

#[test]
fn dump_lists_children_before_parents() {
    let two = ex_real_from_i64(2);
    let s = ex_real_sqrt(two);
    let raw = ex_real_dump(s);
    assert!(!raw.is_null());
    let text = unsafe { CStr::from_ptr(raw) }.to_str().unwrap().to_string();
    ex_string_free(raw);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("leaf"));
    assert!(lines[1].contains("root[2]"));

    ex_real_free(s);
    ex_real_free(two);
}

#[test]
fn clone_outlives_original() {
    let two = ex_real_from_i64(2);
    let s = ex_real_sqrt(two);
    let kept = ex_real_clone(s);
    ex_real_free(s);
    ex_real_free(two);
    let mut sign = 0;
    assert_eq!(ex_real_sign(kept, ExSepPolicy::Prove, 1, &mut sign), ExStatus::Ok);
    assert_eq!(sign, 1);
    ex_real_free(kept);
}

#[test]
fn generated_header_covers_the_surface() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/exdag.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "ex_real_from_i64",
        "ex_real_from_f64",
        "ex_real_add",
        "ex_real_div",
        "ex_real_sqrt",
        "ex_real_root",
        "ex_real_sign",
        "ex_real_approx_f64",
        "ex_real_restructure",
        "ex_real_dump",
        "ex_string_free",
        "ex_real_free",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
    assert!(text.contains("EXDAG_H"));
}
