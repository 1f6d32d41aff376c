//! Arbitrary-precision binary floats driven by absolute-error targets.
//!
//! Every operation takes the error it is allowed to make, as a power-of-two
//! exponent: the result differs from the exact real result by at most
//! 2^target. Addition, subtraction, multiplication and negation are closed
//! over these floats and also accept an exact target; division and roots are
//! not closed and require a finite target.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign as IntSign};
use num_traits::{One, ToPrimitive, Zero};

/// Absolute-error bound as a power-of-two exponent, or no error at all.
/// Ordered by strictness: `Exact` is below every finite exponent, and a
/// smaller exponent means a tighter bound.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ErrorExp {
    /// The value is exact.
    Exact,
    /// Absolute error at most 2^e.
    Exp(i64),
}

impl ErrorExp {
    pub fn is_exact(self) -> bool {
        matches!(self, ErrorExp::Exact)
    }

    pub fn exp(self) -> Option<i64> {
        match self {
            ErrorExp::Exact => None,
            ErrorExp::Exp(e) => Some(e),
        }
    }

    /// Shifts a finite bound by `d` bits; exact stays exact.
    pub fn offset(self, d: i64) -> ErrorExp {
        match self {
            ErrorExp::Exact => ErrorExp::Exact,
            ErrorExp::Exp(e) => ErrorExp::Exp(e.saturating_add(d)),
        }
    }
}

impl PartialOrd for ErrorExp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ErrorExp {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ErrorExp::Exact, ErrorExp::Exact) => Ordering::Equal,
            (ErrorExp::Exact, ErrorExp::Exp(_)) => Ordering::Less,
            (ErrorExp::Exp(_), ErrorExp::Exact) => Ordering::Greater,
            (ErrorExp::Exp(a), ErrorExp::Exp(b)) => a.cmp(b),
        }
    }
}

/// Sign, mantissa and exponent: the value is `sign * mant * 2^exp`.
///
/// Canonical form: zero is `(0, 0, 0)`; a nonzero mantissa is odd. Structural
/// equality therefore coincides with value equality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BigFloat {
    sign: i8,
    mant: BigUint,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> BigFloat {
        BigFloat { sign: 0, mant: BigUint::zero(), exp: 0 }
    }

    /// Builds the canonical float `sign * mant * 2^exp`.
    pub fn from_parts(sign: i8, mant: BigUint, exp: i64) -> BigFloat {
        if mant.is_zero() || sign == 0 {
            return BigFloat::zero();
        }
        debug_assert!(sign == 1 || sign == -1);
        let tz = mant.trailing_zeros().unwrap();
        BigFloat {
            sign,
            mant: mant >> tz as usize,
            exp: exp + tz as i64,
        }
    }

    pub fn from_i64(v: i64) -> BigFloat {
        if v == 0 {
            return BigFloat::zero();
        }
        let sign = if v < 0 { -1 } else { 1 };
        BigFloat::from_parts(sign, BigUint::from(v.unsigned_abs()), 0)
    }

    /// Exact conversion of a finite double; `None` for NaN or infinities.
    pub fn from_f64(v: f64) -> Option<BigFloat> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(BigFloat::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp_field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        Some(BigFloat::from_parts(sign, BigUint::from(mant), exp))
    }

    /// 2^e.
    pub fn pow2(e: i64) -> BigFloat {
        BigFloat { sign: 1, mant: BigUint::one(), exp: e }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn signum(&self) -> i8 {
        self.sign
    }

    /// Position of the most significant bit: `2^msb <= |x| < 2^(msb+1)`.
    /// The value must be nonzero.
    pub fn msb(&self) -> i64 {
        assert!(!self.is_zero(), "msb of zero");
        self.exp + self.mant.bits() as i64 - 1
    }

    pub fn mantissa_bits(&self) -> u64 {
        self.mant.bits()
    }

    /// `(sign, mantissa, exponent)` in canonical form, for oracles and FFI.
    pub fn to_parts(&self) -> (i8, &BigUint, i64) {
        (self.sign, &self.mant, self.exp)
    }

    pub fn abs(&self) -> BigFloat {
        BigFloat { sign: self.sign.abs(), mant: self.mant.clone(), exp: self.exp }
    }

    pub fn neg(&self) -> BigFloat {
        BigFloat { sign: -self.sign, mant: self.mant.clone(), exp: self.exp }
    }

    /// Compares `|self|` with 2^e without allocating.
    pub fn abs_cmp_pow2(&self, e: i64) -> Ordering {
        if self.is_zero() {
            return Ordering::Less;
        }
        let m = self.msb();
        match m.cmp(&e) {
            Ordering::Less => Ordering::Less,
            Ordering::Greater => Ordering::Greater,
            // msb equal: |x| = 2^e exactly iff the mantissa is 1
            Ordering::Equal => {
                if self.mant.is_one() {
                    Ordering::Equal
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    /// Drops all bits of weight below 2^t, rounding toward zero.
    /// The result differs from the input by less than 2^t.
    pub fn trunc_to(&self, t: i64) -> BigFloat {
        if self.is_zero() || self.exp >= t {
            return self.clone();
        }
        let shift = (t - self.exp) as u64;
        if shift >= self.mant.bits() {
            return BigFloat::zero();
        }
        BigFloat::from_parts(self.sign, &self.mant >> shift as usize, t)
    }

    fn exact_add(x: &BigFloat, y: &BigFloat) -> BigFloat {
        if x.is_zero() {
            return y.clone();
        }
        if y.is_zero() {
            return x.clone();
        }
        let e = x.exp.min(y.exp);
        let ix = BigInt::from_biguint(int_sign(x.sign), &x.mant << (x.exp - e) as usize);
        let iy = BigInt::from_biguint(int_sign(y.sign), &y.mant << (y.exp - e) as usize);
        let (s, mag) = (ix + iy).into_parts();
        match s {
            IntSign::NoSign => BigFloat::zero(),
            IntSign::Plus => BigFloat::from_parts(1, mag, e),
            IntSign::Minus => BigFloat::from_parts(-1, mag, e),
        }
    }

    fn exact_mul(x: &BigFloat, y: &BigFloat) -> BigFloat {
        if x.is_zero() || y.is_zero() {
            return BigFloat::zero();
        }
        BigFloat {
            sign: x.sign * y.sign,
            mant: &x.mant * &y.mant,
            exp: x.exp + y.exp,
        }
    }

    /// `x + y` within 2^target (exact for an exact target).
    pub fn add(x: &BigFloat, y: &BigFloat, target: ErrorExp) -> BigFloat {
        match target {
            ErrorExp::Exact => BigFloat::exact_add(x, y),
            // operand truncation 2*2^(t-2) plus result truncation 2^(t-1)
            ErrorExp::Exp(t) => {
                let x1 = x.trunc_to(t - 2);
                let y1 = y.trunc_to(t - 2);
                BigFloat::exact_add(&x1, &y1).trunc_to(t - 1)
            }
        }
    }

    /// `x - y` within 2^target (exact for an exact target).
    pub fn sub(x: &BigFloat, y: &BigFloat, target: ErrorExp) -> BigFloat {
        BigFloat::add(x, &y.neg(), target)
    }

    /// `x * y` within 2^target (exact for an exact target).
    pub fn mul(x: &BigFloat, y: &BigFloat, target: ErrorExp) -> BigFloat {
        match target {
            ErrorExp::Exact => BigFloat::exact_mul(x, y),
            ErrorExp::Exp(t) => {
                if x.is_zero() || y.is_zero() {
                    return BigFloat::zero();
                }
                // each operand truncation contributes at most 2^(t-2)
                let x1 = x.trunc_to(t - y.msb() - 3);
                let y1 = y.trunc_to(t - x.msb() - 3);
                if x1.is_zero() || y1.is_zero() {
                    return BigFloat::zero();
                }
                BigFloat::exact_mul(&x1, &y1).trunc_to(t - 1)
            }
        }
    }

    /// `x / y` within 2^t. `y` must be nonzero; the target must be finite
    /// because quotients are not representable in general.
    pub fn div(x: &BigFloat, y: &BigFloat, t: i64) -> BigFloat {
        assert!(!y.is_zero(), "division by zero");
        if x.is_zero() {
            return BigFloat::zero();
        }
        let mx = x.msb();
        let my = y.msb();
        let x1 = x.trunc_to(t + my - 3);
        if x1.is_zero() {
            // |x| < 2^(t+my-3) implies |x/y| < 2^(t-3)
            return BigFloat::zero();
        }
        // keep the divisor's top two bits so |y1| >= 0.75 |y|
        let y1 = y.trunc_to((t + 2 * my - mx - 5).min(my - 2));
        // floor quotient at granularity 2^(t-2)
        let sh = x1.exp - y1.exp - (t - 2);
        let (num, den) = if sh >= 0 {
            (&x1.mant << sh as usize, y1.mant.clone())
        } else {
            (x1.mant.clone(), &y1.mant << (-sh) as usize)
        };
        let q = num / den;
        BigFloat::from_parts(x.sign * y.sign, q, t - 2)
    }

    /// k-th root of `x` within 2^t. Requires `k >= 2`, a finite target, and
    /// `x >= 0` when `k` is even. The exact value is returned whenever it is
    /// representable at the working granularity (e.g. root(4, 2, t) = 2).
    pub fn root(x: &BigFloat, k: u32, t: i64) -> BigFloat {
        assert!(k >= 2, "root index must be at least 2");
        assert!(k % 2 == 1 || x.sign >= 0, "even root of a negative value");
        if x.is_zero() {
            return BigFloat::zero();
        }
        let tp = t - 3;
        // N = floor(|x| * 2^(-k*tp)); the root of N sits at scale 2^tp
        let sh = x.exp - k as i64 * tp;
        let n = if sh >= 0 {
            &x.mant << sh as usize
        } else if (-sh) as u64 >= x.mant.bits() {
            BigUint::zero()
        } else {
            &x.mant >> (-sh) as usize
        };
        if n.is_zero() {
            // |x| < 2^(k*tp) implies |root| < 2^tp
            return BigFloat::zero();
        }
        let r = if k == 2 { isqrt_within7(&n) } else { n.nth_root(k) };
        BigFloat::from_parts(x.sign, r, tp)
    }

    /// Truncating conversion to double, saturating to infinities far outside
    /// the double range. Used only to seed outward-rounded intervals.
    pub fn to_f64_trunc(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let take = bits.min(54);
        let top = (&self.mant >> (bits - take) as usize).to_u64().unwrap() as f64;
        let scaled = ldexp(top, self.exp + (bits - take) as i64);
        if self.sign < 0 {
            -scaled
        } else {
            scaled
        }
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BigFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        if self.sign == 0 {
            return Ordering::Equal;
        }
        let mag = {
            let ma = self.msb();
            let mb = other.msb();
            match ma.cmp(&mb) {
                Ordering::Equal => {
                    // equal msb: align exponents and compare mantissas
                    if self.exp >= other.exp {
                        (&self.mant << (self.exp - other.exp) as usize).cmp(&other.mant)
                    } else {
                        self.mant.cmp(&(&other.mant << (other.exp - self.exp) as usize))
                    }
                }
                ord => ord,
            }
        };
        if self.sign > 0 {
            mag
        } else {
            mag.reverse()
        }
    }
}

fn int_sign(s: i8) -> IntSign {
    match s.cmp(&0) {
        Ordering::Less => IntSign::Minus,
        Ordering::Equal => IntSign::NoSign,
        Ordering::Greater => IntSign::Plus,
    }
}

/// Multiplies by 2^e without going through powi overflow on large exponents.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        if !x.is_finite() {
            return x;
        }
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        if x == 0.0 {
            return x;
        }
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

fn isqrt_u128(v: u128) -> u128 {
    if v == 0 {
        return 0;
    }
    let mut r = (v as f64).sqrt() as u128;
    r = r.clamp(1, 1 << 63);
    // a few Newton steps erase the f64 conversion error, then fix to floor
    for _ in 0..3 {
        r = (r + v / r) >> 1;
    }
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Integer square root candidate with `|r - sqrt(n)| <= 7`, verified a
/// posteriori; falls back to the exact slow path if verification fails.
///
/// Uses a division-free reciprocal-square-root Newton iteration in fixed
/// point with doubling precision, so the cost is a constant number of
/// multiplications at the result size.
fn isqrt_within7(n: &BigUint) -> BigUint {
    let b = n.bits();
    if b <= 126 {
        return BigUint::from(isqrt_u128(n.to_u128().unwrap()));
    }
    let h = b.div_ceil(2); // sqrt(n) in [2^(h-1), 2^h)
    // w approximates 1/sqrt(y) for y = n / 2^(2h) in [1/4, 1), scaled by 2^p
    let (top, ts) = top_u64(n);
    let yf = ldexp(top as f64, ts as i64 - 2 * h as i64);
    let wf = 1.0 / yf.sqrt();
    let mut w = BigUint::from((wf * (1u64 << 50) as f64) as u64);
    let mut p: u64 = 50;
    let pt = h + 8;
    while p < pt {
        let pn = (2 * p - 8).min(pt);
        let wsq = &w * &w;
        let sigma = b.saturating_sub(pn + 40);
        let nt = n >> sigma as usize;
        let t = nt * wsq; // ~ (y w^2) * 2^m with y w^2 near 1
        let m = 2 * p + 2 * h - sigma;
        let three = BigUint::from(3u32) << m as usize;
        if t >= three {
            return n.sqrt();
        }
        let v = three - t; // ~ (3 - y w^2) * 2^m
        let down = (p + m + 1 - pn) as usize;
        w = (w * v) >> down;
        p = pn;
    }
    // sqrt(n) = n * w / 2^h at scale 2^p
    let sigma2 = b.saturating_sub(h + 50);
    let nt2 = n >> sigma2 as usize;
    let down = (p + h - sigma2) as usize;
    let mut r = (nt2 * &w) >> down;
    for _ in 0..2 {
        let rr = &r * &r;
        let (diff, over) = if rr >= *n { (rr - n, true) } else { (n - rr, false) };
        if diff <= &r * 7u32 {
            return r;
        }
        let adj = (&diff / (&r << 1usize)).max(BigUint::one());
        if over {
            r -= adj; // adj < r/2 because diff < r^2
        } else {
            r += adj;
        }
    }
    n.sqrt()
}

fn top_u64(n: &BigUint) -> (u64, u64) {
    let b = n.bits();
    if b <= 64 {
        (n.to_u64().unwrap(), 0)
    } else {
        let s = b - 64;
        ((n >> s as usize).to_u64().unwrap(), s)
    }
}

/// A value together with the absolute error bound it was computed to.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Approximation {
    pub value: BigFloat,
    pub error: ErrorExp,
}

impl Approximation {
    pub fn new(value: BigFloat, error: ErrorExp) -> Approximation {
        Approximation { value, error }
    }

    pub fn exact(value: BigFloat) -> Approximation {
        Approximation { value, error: ErrorExp::Exact }
    }

    pub fn is_exact(&self) -> bool {
        self.error.is_exact()
    }

    /// True when the envelope `value +- 2^error` excludes zero.
    pub fn separated_from_zero(&self) -> bool {
        match self.error {
            ErrorExp::Exact => !self.value.is_zero(),
            ErrorExp::Exp(e) => self.value.abs_cmp_pow2(e) == Ordering::Greater,
        }
    }

    /// Upper bound on floor(log2 |x|) over the envelope; `None` only when
    /// the envelope is exactly {0}.
    pub fn msb_upper(&self) -> Option<i64> {
        match self.error {
            ErrorExp::Exact => {
                if self.value.is_zero() {
                    None
                } else {
                    Some(self.value.msb())
                }
            }
            ErrorExp::Exp(e) => {
                let hi = BigFloat::add(&self.value.abs(), &BigFloat::pow2(e), ErrorExp::Exact);
                Some(hi.msb())
            }
        }
    }

    /// Lower bound on floor(log2 |x|) over the envelope; `None` when the
    /// envelope contains zero.
    pub fn msb_lower(&self) -> Option<i64> {
        match self.error {
            ErrorExp::Exact => {
                if self.value.is_zero() {
                    None
                } else {
                    Some(self.value.msb())
                }
            }
            ErrorExp::Exp(e) => {
                let lo = BigFloat::sub(&self.value.abs(), &BigFloat::pow2(e), ErrorExp::Exact);
                if lo.signum() <= 0 {
                    None
                } else {
                    Some(lo.msb())
                }
            }
        }
    }
}
