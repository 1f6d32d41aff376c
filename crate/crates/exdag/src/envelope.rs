//! Bounded-precision magnitude envelopes: a second-stage filter in exact
//! arithmetic for nodes whose double interval is dead or unbounded. An
//! envelope is a value plus a nonnegative error radius, both bigfloats;
//! values are kept near a fixed mantissa size and radii are combined with
//! upward rounding, so the enclosure stays sound at any magnitude while
//! one pass over a node costs a few small-number operations.

use crate::bigfloat::{BigFloat, ErrorExp};
use crate::node::NodeKind;

/// Mantissa bits kept in envelope values.
const VALUE_BITS: i64 = 96;
/// Mantissa bits kept in error radii.
const RADIUS_BITS: i64 = 12;

/// `value +- radius`, with `radius >= 0`.
#[derive(Clone)]
pub(crate) struct Envelope {
    pub value: BigFloat,
    pub radius: BigFloat,
}

impl Envelope {
    pub fn exact(value: BigFloat) -> Envelope {
        Envelope { value, radius: BigFloat::zero() }
    }

    /// Unknown value of magnitude at most `2^mag`.
    pub fn magnitude_only(mag: i64) -> Envelope {
        Envelope { value: BigFloat::zero(), radius: BigFloat::pow2(mag) }
    }

    /// Exponent `u` with `|true value| <= 2^u`; `None` for an exact zero.
    pub fn mag_exp(&self) -> Option<i64> {
        let vm = if self.value.is_zero() { None } else { Some(self.value.msb()) };
        let rm = if self.radius.is_zero() { None } else { Some(self.radius.msb()) };
        match (vm, rm) {
            (None, None) => None,
            (a, b) => Some(a.max(b).unwrap().saturating_add(2)),
        }
    }

    /// True when the enclosure excludes zero.
    pub fn separated(&self) -> bool {
        !self.value.is_zero()
            && (self.radius.is_zero()
                || self.value.msb() >= self.radius.msb().saturating_add(2))
    }

    /// The coarse error exponent for caching the envelope as an
    /// approximation: `radius <= 2^exp`.
    pub fn radius_exp(&self) -> ErrorExp {
        if self.radius.is_zero() {
            ErrorExp::Exact
        } else {
            ErrorExp::Exp(self.radius.msb().saturating_add(1))
        }
    }
}

/// Rounds a nonnegative bigfloat up to at most `RADIUS_BITS` mantissa bits.
fn up(x: BigFloat) -> BigFloat {
    if x.is_zero() {
        return x;
    }
    let t = x.msb().saturating_sub(RADIUS_BITS);
    let y = x.trunc_to(t);
    if y == x {
        y
    } else {
        BigFloat::add(&y, &BigFloat::pow2(t), ErrorExp::Exact)
    }
}

/// `a + b` rounded up, for nonnegative radii of bounded mantissa size.
fn rsum(a: &BigFloat, b: &BigFloat) -> BigFloat {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let (big, small) = if a.msb() >= b.msb() { (a, b) } else { (b, a) };
    // a distant small term is absorbed into one ulp of the large one
    if big.msb().saturating_sub(small.msb()) > RADIUS_BITS + 2 {
        let ulp = BigFloat::pow2(big.msb().saturating_sub(RADIUS_BITS + 1));
        up(BigFloat::add(big, &ulp, ErrorExp::Exact))
    } else {
        up(BigFloat::add(big, small, ErrorExp::Exact))
    }
}

fn rsum3(a: &BigFloat, b: &BigFloat, c: &BigFloat) -> BigFloat {
    rsum(&rsum(a, b), c)
}

/// `a * b` rounded up, nonnegative.
fn mul_up(a: &BigFloat, b: &BigFloat) -> BigFloat {
    if a.is_zero() || b.is_zero() {
        return BigFloat::zero();
    }
    up(BigFloat::mul(a, b, ErrorExp::Exact))
}

/// ceil(n / d) for a positive divisor.
fn div_ceil(n: i64, d: i64) -> i64 {
    n.div_euclid(d) + i64::from(n.rem_euclid(d) != 0)
}

fn add_like(x: &Envelope, y: &Envelope, negate_y: bool) -> Envelope {
    let yv = if negate_y { y.value.neg() } else { y.value.clone() };
    let scales = [&x.value, &yv].iter().filter(|v| !v.is_zero()).map(|v| v.msb()).max();
    let (value, trunc) = match scales {
        None => (BigFloat::zero(), BigFloat::zero()),
        Some(m) => {
            let t = m.saturating_sub(VALUE_BITS);
            (BigFloat::add(&x.value, &yv, ErrorExp::Exp(t)), BigFloat::pow2(t))
        }
    };
    Envelope { value, radius: rsum3(&x.radius, &y.radius, &trunc) }
}

fn mul_env(x: &Envelope, y: &Envelope) -> Envelope {
    let cross1 = mul_up(&x.radius, &y.value.abs());
    let cross2 = mul_up(&y.radius, &x.value.abs());
    let cross3 = mul_up(&x.radius, &y.radius);
    if x.value.is_zero() || y.value.is_zero() {
        return Envelope { value: BigFloat::zero(), radius: rsum3(&cross1, &cross2, &cross3) };
    }
    let t = x.value.msb().saturating_add(y.value.msb()).saturating_sub(VALUE_BITS);
    let value = BigFloat::mul(&x.value, &y.value, ErrorExp::Exp(t));
    Envelope { value, radius: rsum3(&rsum(&cross1, &cross2), &cross3, &BigFloat::pow2(t)) }
}

/// Exponent `l` with `|true value| >= 2^l`, when the envelope proves one.
fn floor_exp(e: &Envelope) -> Option<i64> {
    if e.value.is_zero() {
        return None;
    }
    let m = e.value.msb();
    if e.radius.is_zero() {
        Some(m)
    } else if m >= e.radius.msb().saturating_add(2) {
        Some(m - 1)
    } else {
        None
    }
}

fn div_env(x: &Envelope, y: &Envelope) -> Option<Envelope> {
    let l = floor_exp(y)?;
    let my = y.value.msb();
    // |x/y - vx/vy| <= rx/|y| + |vx| ry / (|y| |vy|), with |y|,|vy| >= 2^l
    let term1 = mul_up(&x.radius, &BigFloat::pow2(-l));
    let term2 = mul_up(&mul_up(&x.value.abs(), &y.radius), &BigFloat::pow2(-l - my));
    if x.value.is_zero() {
        return Some(Envelope { value: BigFloat::zero(), radius: rsum(&term1, &term2) });
    }
    let t = x.value.msb().saturating_sub(my).saturating_sub(VALUE_BITS);
    let value = BigFloat::div(&x.value, &y.value, t);
    Some(Envelope { value, radius: rsum3(&term1, &term2, &BigFloat::pow2(t)) })
}

fn root_env(x: &Envelope, k: u32) -> Envelope {
    let ki = k as i64;
    match floor_exp(x) {
        Some(l) if k % 2 == 1 || x.value.signum() > 0 => {
            // |x^(1/k) - vx^(1/k)| <= rx * sup |d/dt t^(1/k)| <= rx * 2^g
            let g = div_ceil((1 - ki).saturating_mul(l), ki);
            let term = mul_up(&x.radius, &BigFloat::pow2(g));
            let t = x.value.msb().div_euclid(ki).saturating_sub(VALUE_BITS);
            let value = BigFloat::root(&x.value, k, t);
            Envelope { value, radius: rsum(&term, &BigFloat::pow2(t)) }
        }
        _ => {
            // radicand too close to zero (or of negative center under an
            // even index): fall back to a pure magnitude bound
            match x.mag_exp() {
                None => Envelope::exact(BigFloat::zero()),
                Some(u) => Envelope::magnitude_only(div_ceil(u, ki).saturating_add(1)),
            }
        }
    }
}

/// The envelope of an operator node from its children's envelopes.
/// `None` when no enclosure better than a magnitude bound exists (division
/// with an unseparated divisor).
pub(crate) fn compute(kind: NodeKind, kids: &[Envelope]) -> Option<Envelope> {
    Some(match kind {
        NodeKind::Leaf => unreachable!("leaves hold exact values"),
        NodeKind::Add => add_like(&kids[0], &kids[1], false),
        NodeKind::Sub => add_like(&kids[0], &kids[1], true),
        NodeKind::Neg => Envelope { value: kids[0].value.neg(), radius: kids[0].radius.clone() },
        NodeKind::Mul => mul_env(&kids[0], &kids[1]),
        NodeKind::Div => div_env(&kids[0], &kids[1])?,
        NodeKind::Root(k) => root_env(&kids[0], k),
    })
}
