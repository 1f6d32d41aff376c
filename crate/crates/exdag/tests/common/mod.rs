//! Shared test support: an independent fixed-point interval oracle and
//! mirrored random expression construction.
//!
//! Intervals are pairs of integers at scale 2^-prec. Add and sub are exact;
//! mul, div and roots round outward, so every computed interval encloses the
//! exact real value. The oracle shares no code with the library under test.
#![allow(dead_code)]

use exdag::bench::{Rng, Weights};
use exdag::{Approximation, BigFloat, Real};
use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, Zero};

// ---------------------------------------------------------------------------
// Expression mirror

/// Operator tree replayed through the oracle. Structure does not matter to
/// the oracle, only the value; shared subterms may be duplicated.
pub enum Expr {
    Leaf(f64),
    Int(i64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Root(u32, Box<Expr>),
}

// Long chains would overflow the stack under the default recursive drop.
impl Drop for Expr {
    fn drop(&mut self) {
        let mut stack = Vec::new();
        take_children(self, &mut stack);
        while let Some(mut e) = stack.pop() {
            take_children(&mut e, &mut stack);
        }
    }
}

fn take_children(e: &mut Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Leaf(_) | Expr::Int(_) => {}
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            out.push(std::mem::replace(&mut **a, Expr::Int(0)));
            out.push(std::mem::replace(&mut **b, Expr::Int(0)));
        }
        Expr::Neg(a) | Expr::Root(_, a) => {
            out.push(std::mem::replace(&mut **a, Expr::Int(0)));
        }
    }
}

pub fn leaf(v: f64) -> Expr {
    Expr::Leaf(v)
}

pub fn int(v: i64) -> Expr {
    Expr::Int(v)
}

pub fn add(a: Expr, b: Expr) -> Expr {
    Expr::Add(Box::new(a), Box::new(b))
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    Expr::Sub(Box::new(a), Box::new(b))
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    Expr::Mul(Box::new(a), Box::new(b))
}

pub fn div(a: Expr, b: Expr) -> Expr {
    Expr::Div(Box::new(a), Box::new(b))
}

pub fn neg(a: Expr) -> Expr {
    Expr::Neg(Box::new(a))
}

pub fn root(k: u32, a: Expr) -> Expr {
    Expr::Root(k, Box::new(a))
}

pub fn sqrt(a: Expr) -> Expr {
    root(2, a)
}

// ---------------------------------------------------------------------------
// Fixed-point intervals

/// Closed interval `[lo, hi] * 2^-prec`, `lo <= hi`.
#[derive(Clone, Debug)]
pub struct Iv {
    pub lo: BigInt,
    pub hi: BigInt,
    pub prec: u64,
}

/// `a >> k` on BigInt rounds toward negative infinity, which is the floor.
fn shr_floor(a: &BigInt, k: u64) -> BigInt {
    a >> k
}

fn shr_ceil(a: &BigInt, k: u64) -> BigInt {
    -shr_floor(&-a, k)
}

/// Floor of `a / b` for `b > 0`.
fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(b.is_positive());
    let q = a / b;
    if (a - &q * b).is_negative() {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -div_floor(&-a, b)
}

/// Truncated principal k-th root, rounded toward negative infinity.
fn root_floor(x: &BigInt, k: u32) -> BigInt {
    if x.is_negative() {
        -root_ceil(&-x, k)
    } else {
        x.nth_root(k)
    }
}

/// Truncated principal k-th root, rounded toward positive infinity.
fn root_ceil(x: &BigInt, k: u32) -> BigInt {
    if x.is_negative() {
        -root_floor(&-x, k)
    } else {
        let r = x.nth_root(k);
        if &r.pow(k) == x {
            r
        } else {
            r + 1
        }
    }
}

impl Iv {
    pub fn point(v: BigInt, prec: u64) -> Iv {
        Iv { lo: v.clone(), hi: v, prec }
    }

    pub fn from_i64(v: i64, prec: u64) -> Iv {
        Iv::point(BigInt::from(v) << prec, prec)
    }

    /// Exact dyadic decomposition of a finite double.
    pub fn from_f64(v: f64, prec: u64) -> Iv {
        assert!(v.is_finite(), "oracle leaf must be finite");
        let bits = v.to_bits();
        let negative = bits >> 63 == 1;
        let exp_field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if exp_field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        let mut x = BigInt::from(m);
        if negative {
            x = -x;
        }
        let shift = e + prec as i64;
        if shift >= 0 {
            Iv::point(x << shift as u64, prec)
        } else {
            let k = (-shift) as u64;
            Iv { lo: shr_floor(&x, k), hi: shr_ceil(&x, k), prec }
        }
    }

    pub fn width(&self) -> BigInt {
        &self.hi - &self.lo
    }

    /// Definite sign of every value in the interval, if there is one.
    pub fn sign(&self) -> Option<i8> {
        if self.lo.is_positive() {
            Some(1)
        } else if self.hi.is_negative() {
            Some(-1)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(0)
        } else {
            None
        }
    }

    pub fn add(&self, o: &Iv) -> Iv {
        debug_assert_eq!(self.prec, o.prec);
        Iv { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, prec: self.prec }
    }

    pub fn sub(&self, o: &Iv) -> Iv {
        debug_assert_eq!(self.prec, o.prec);
        Iv { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo, prec: self.prec }
    }

    pub fn neg(&self) -> Iv {
        Iv { lo: -&self.hi, hi: -&self.lo, prec: self.prec }
    }

    pub fn mul(&self, o: &Iv) -> Iv {
        debug_assert_eq!(self.prec, o.prec);
        let p = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = p.iter().min().unwrap();
        let hi = p.iter().max().unwrap();
        Iv {
            lo: shr_floor(lo, self.prec),
            hi: shr_ceil(hi, self.prec),
            prec: self.prec,
        }
    }

    /// `self / o`; the divisor interval must exclude zero.
    pub fn div(&self, o: &Iv) -> Iv {
        debug_assert_eq!(self.prec, o.prec);
        assert!(
            o.sign().map_or(false, |s| s != 0),
            "oracle divisor interval touches zero; raise the precision"
        );
        let num = [&self.lo << self.prec, &self.hi << self.prec];
        let den = [&o.lo, &o.hi];
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for n in &num {
            for d in den {
                let (f, c) = if d.is_positive() {
                    (div_floor(n, d), div_ceil(n, d))
                } else {
                    let nd = -d;
                    (div_floor(&-n, &nd), div_ceil(&-n, &nd))
                };
                if lo.as_ref().map_or(true, |v| f < *v) {
                    lo = Some(f);
                }
                if hi.as_ref().map_or(true, |v| c > *v) {
                    hi = Some(c);
                }
            }
        }
        Iv { lo: lo.unwrap(), hi: hi.unwrap(), prec: self.prec }
    }

    /// Principal k-th root. Even k requires a nonnegative interval.
    pub fn root(&self, k: u32) -> Iv {
        assert!(k >= 2);
        if k % 2 == 0 {
            assert!(
                !self.lo.is_negative(),
                "oracle radicand interval dips below zero; raise the precision"
            );
        }
        let s = self.prec * (k as u64 - 1);
        Iv {
            lo: root_floor(&(&self.lo << s), k),
            hi: root_ceil(&(&self.hi << s), k),
            prec: self.prec,
        }
    }
}

// ---------------------------------------------------------------------------
// Oracle evaluation

/// Evaluates the mirror at a fixed precision. Recursion depth equals the
/// expression depth; keep trees under a few thousand nodes deep.
pub fn oracle_eval(e: &Expr, prec: u64) -> Iv {
    match e {
        Expr::Leaf(v) => Iv::from_f64(*v, prec),
        Expr::Int(v) => Iv::from_i64(*v, prec),
        Expr::Add(a, b) => oracle_eval(a, prec).add(&oracle_eval(b, prec)),
        Expr::Sub(a, b) => oracle_eval(a, prec).sub(&oracle_eval(b, prec)),
        Expr::Mul(a, b) => oracle_eval(a, prec).mul(&oracle_eval(b, prec)),
        Expr::Div(a, b) => oracle_eval(a, prec).div(&oracle_eval(b, prec)),
        Expr::Neg(a) => oracle_eval(a, prec).neg(),
        Expr::Root(k, a) => oracle_eval(a, prec).root(*k),
    }
}

/// Evaluates with enough precision that the interval is narrower than
/// `2^(acc - 2)`, doubling the working precision until it is. The starting
/// precision is twice the demanded accuracy, floored at 128 bits.
pub fn certified(e: &Expr, acc: i64) -> Iv {
    assert!(acc < 0);
    let mut prec = (2 * -acc as u64).max(128);
    loop {
        let iv = oracle_eval(e, prec);
        let margin = prec as i64 + acc;
        if margin >= 8 && iv.width() <= BigInt::one() << (margin - 2) as u64 {
            return iv;
        }
        assert!(prec < 1 << 16, "oracle interval refuses to converge");
        prec *= 2;
    }
}

/// Definite sign of the expression, refining precision until the interval
/// separates from zero. Panics on (apparent) exact zeros; use `certified`
/// plus a width argument for those.
pub fn oracle_sign(e: &Expr) -> i8 {
    let mut prec = 128;
    loop {
        if let Some(s) = oracle_eval(e, prec).sign() {
            return s;
        }
        assert!(prec < 1 << 14, "oracle cannot separate the value from zero");
        prec *= 2;
    }
}

// ---------------------------------------------------------------------------
// Checking library output against the oracle

/// `v * 2^prec`, rounded toward negative infinity.
pub fn to_scaled_floor(v: &BigFloat, prec: u64) -> BigInt {
    let (sign, mant, exp) = v.to_parts();
    let s = if sign < 0 { Sign::Minus } else { Sign::Plus };
    let mut x = BigInt::from_biguint(s, mant.clone());
    let shift = exp + prec as i64;
    if shift >= 0 {
        x << shift as u64
    } else {
        x >>= (-shift) as u64;
        x
    }
}

/// Asserts that `ap.value` lies within `2^acc` of the oracle interval.
/// The interval must already be narrower than `2^(acc - 2)` (as produced
/// by `certified`), so a pass certifies agreement with the exact value to
/// within `2^(acc + 1)` while never rejecting an answer that honors the
/// `2^acc` contract.
pub fn assert_within(ap: &Approximation, iv: &Iv, acc: i64) {
    let margin = iv.prec as i64 + acc;
    assert!(margin >= 8, "oracle precision too low for the demanded accuracy");
    assert!(
        iv.width() <= BigInt::one() << (margin - 2) as u64,
        "oracle interval too wide to certify 2^{acc}"
    );
    let slack = (BigInt::one() << margin as u64) + 1u8;
    let v = to_scaled_floor(&ap.value, iv.prec);
    assert!(
        v >= &iv.lo - &slack && v <= &iv.hi + &slack,
        "value {} outside oracle interval [{}, {}] (+- 2^{}) at scale 2^-{}",
        v,
        iv.lo,
        iv.hi,
        margin,
        iv.prec
    );
}

// ---------------------------------------------------------------------------
// Mirrored generators

/// Builds the same dag as `bench::build_randops` together with an oracle
/// mirror, consuming the random stream identically.
pub fn gen_randops(n: u64, w: &Weights, rng: &mut Rng) -> (Real, Expr) {
    let total = w.total();
    assert!(total > 0);
    let mut result = Real::from_i64(1);
    let mut mirror = int(1);
    for _ in 0..n {
        let r = rng.exponential();
        let operand = Real::from_f64(r).expect("variate is finite").sqrt();
        let m_operand = sqrt(leaf(r));
        let t = rng.below(total);
        (result, mirror) = if t < w.add {
            (result + operand, add(mirror, m_operand))
        } else if t < w.add + w.sub {
            (result - operand, sub(mirror, m_operand))
        } else if t < w.add + w.sub + w.mul {
            (result * operand, mul(mirror, m_operand))
        } else {
            (result / operand, div(mirror, m_operand))
        };
    }
    (result, mirror)
}

/// Oracle mirror of `bench::build_bincoeff`.
pub fn bincoeff_expr(n: u64) -> Expr {
    assert!(n >= 1);
    let mut num = sub(sqrt(int(13)), int(0));
    let mut den = int(1);
    for i in 1..n {
        num = mul(num, sub(sqrt(int(13)), int(i as i64)));
        den = mul(den, int(i as i64 + 1));
    }
    div(num, den)
}
