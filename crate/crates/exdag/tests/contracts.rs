//! Public-API contracts: the pinned dump format, value preservation under
//! every restructuring strategy, nesting of accuracy targets, and each
//! error path reachable from outside.

use exdag::bench::{self, Rng, Weights};
use exdag::{BigFloat, ErrorExp, EvalConfig, EvalError, Real, SepPolicy, Strategy};
use proptest::prelude::*;
use std::cmp::Ordering;

// ---------------------------------------------------------------------------
// Dump format

#[test]
fn dump_golden_plain_tree() {
    let r = (Real::from_i64(1) + Real::from_i64(2)) * Real::from_i64(3);
    let expected = "\
1 leaf [] phi=- parents=1
2 leaf [] phi=- parents=1
3 add [1 2] phi=- parents=1
4 leaf [] phi=- parents=1
5 mul [3 4] phi=- parents=0
";
    assert_eq!(r.dump(), expected);
}

#[test]
fn dump_golden_shared_node() {
    let s = Real::from_i64(2).sqrt();
    let p = &s * &s;
    let expected = "\
1 leaf [] phi=- parents=1
2 root[2] [1] phi=- parents=2
3 mul [2 2] phi=- parents=0
";
    assert_eq!(p.dump(), expected);
}

fn dag(seed: u64, n: u64) -> Real {
    bench::build_randops(n, &Weights::uniform(), &mut Rng::new(seed))
}

fn strategy(idx: usize, k: u64) -> Strategy {
    match idx {
        0 => Strategy::Def,
        1 => Strategy::Amb,
        2 => Strategy::Mtr,
        _ => Strategy::MtrK(k),
    }
}

/// |a - b| <= 2^e, checked exactly.
fn close(a: &BigFloat, b: &BigFloat, e: i64) -> bool {
    BigFloat::sub(a, b, ErrorExp::Exact).abs_cmp_pow2(e) != Ordering::Greater
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Node ids in a dump are topological: every child id is smaller than
    /// its parent's, before and after restructuring.
    #[test]
    fn dump_ids_topologically_sorted(seed in any::<u64>(), n in 5u64..60, sidx in 0usize..4, k in 0u64..12) {
        let r = dag(seed, n);
        r.restructure(strategy(sidx, k));
        for (idx, line) in r.dump().lines().enumerate() {
            let id = idx as u64 + 1;
            // the children list is the space-prefixed bracket; a root's kind
            // label carries its own bracketed index
            let open = line.find(" [").unwrap() + 1;
            let shut = open + line[open..].find(']').unwrap();
            for child in line[open + 1..shut].split_whitespace() {
                let child_id: u64 = child.parse().unwrap();
                prop_assert!(child_id < id, "child {child_id} not before parent {id}");
            }
            prop_assert!(line.starts_with(&format!("{id} ")), "line {line} lacks its id");
        }
    }

    /// Restructuring never changes the value: the rewritten dag agrees
    /// with an untouched twin to the combined accuracy of both runs.
    #[test]
    fn restructuring_preserves_value(seed in any::<u64>(), n in 5u64..60, sidx in 1usize..4, k in 0u64..12) {
        let cfg = EvalConfig { sep_policy: SepPolicy::AssumeNonzero, threads: 1 };
        let plain = dag(seed, n);
        let rewritten = dag(seed, n);
        rewritten.restructure(strategy(sidx, k));
        let a = plain.approximate_with(-120, &cfg).unwrap().0;
        let b = rewritten.approximate_with(-120, &cfg).unwrap().0;
        prop_assert!(close(&a.value, &b.value, -119), "values drifted after restructuring");
    }

    /// Sign decisions agree across strategies and worker counts.
    #[test]
    fn sign_agrees_across_strategies(seed in any::<u64>(), n in 5u64..40, sidx in 1usize..4, threads in 1usize..5) {
        let cfg1 = EvalConfig { sep_policy: SepPolicy::AssumeNonzero, threads: 1 };
        let cfg2 = EvalConfig { sep_policy: SepPolicy::AssumeNonzero, threads };
        let plain = dag(seed, n);
        let rewritten = dag(seed, n);
        rewritten.restructure(strategy(sidx, 5));
        let s1 = plain.sign_with(&cfg1).unwrap().0;
        let s2 = rewritten.sign_with(&cfg2).unwrap().0;
        prop_assert_eq!(s1, s2);
    }

    /// A coarse answer and a fine answer for the same dag must agree to
    /// the coarse tolerance.
    #[test]
    fn accuracy_targets_nest(seed in any::<u64>(), n in 5u64..40, q in -200i64..-40) {
        let r = dag(seed, n);
        let cfg = EvalConfig { sep_policy: SepPolicy::AssumeNonzero, threads: 1 };
        let coarse = r.approximate_with(q, &cfg).unwrap().0;
        let fine = r.approximate_with(q - 40, &cfg).unwrap().0;
        prop_assert!(close(&coarse.value, &fine.value, q + 1));
    }
}

// ---------------------------------------------------------------------------
// Error paths

#[test]
fn division_by_proven_zero_is_reported() {
    let two = Real::from_i64(2);
    let s = two.sqrt();
    let zero = &s * &s - &two;
    let q = Real::from_i64(1) / zero;
    assert_eq!(q.sign(), Err(EvalError::DivisionByZero));
}

#[test]
fn negative_radicand_is_reported() {
    let neg = Real::from_i64(1) - Real::from_i64(2);
    assert_eq!(neg.sqrt().sign(), Err(EvalError::NegativeRadicand));
    // odd roots of negatives are fine
    assert_eq!((Real::from_i64(-27)).root(3).unwrap().sign(), Ok(-1));
}

#[test]
fn invalid_root_indices_are_rejected() {
    assert_eq!(Real::from_i64(2).root(0).err(), Some(EvalError::InvalidRootIndex(0)));
    assert_eq!(Real::from_i64(2).root(1).err(), Some(EvalError::InvalidRootIndex(1)));
}

#[test]
fn non_finite_leaves_are_rejected() {
    assert_eq!(Real::from_f64(f64::NAN).err(), Some(EvalError::NonFiniteInput));
    assert_eq!(Real::from_f64(f64::INFINITY).err(), Some(EvalError::NonFiniteInput));
    assert!(Real::from_f64(f64::MIN_POSITIVE / 4.0).is_ok(), "subnormals are exact");
}

#[test]
fn degree_overflow_is_reported() {
    // 64 nested square roots push the degree bound out of a machine word;
    // a true zero built from the tower forces the zero rule to consult it
    let mut t = Real::from_i64(2);
    for _ in 0..64 {
        t = t.sqrt();
    }
    let probe = &t - &t;
    assert_eq!(probe.sign(), Err(EvalError::DegreeOverflow));
}

#[test]
fn assumed_nonzero_zero_hits_the_iteration_limit() {
    let two = Real::from_i64(2);
    let s = two.sqrt();
    let zero = &s * &s - &two;
    let cfg = EvalConfig { sep_policy: SepPolicy::AssumeNonzero, threads: 1 };
    match zero.sign_with(&cfg) {
        Err(EvalError::IterationLimit { accuracy }) => {
            assert!(accuracy <= exdag::ACCURACY_FLOOR);
        }
        other => panic!("expected an iteration limit, got {other:?}"),
    }
}
