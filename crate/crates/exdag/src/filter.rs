//! Outward-rounded double intervals, used as a cheap first pass when
//! deciding signs. A filter decision avoids touching big-number arithmetic
//! at all; an invalid or zero-straddling interval falls through to the
//! exact path.

use crate::bigfloat::{BigFloat, ErrorExp};

/// Closed interval `[lo, hi]` guaranteed to contain the true value, or an
/// invalid placeholder when no such bound is known. Endpoints may be
/// infinite; an interval stays valid through overflow, only division by a
/// zero-straddling interval and even roots of negative intervals
/// invalidate it.
#[derive(Clone, Copy, Debug)]
pub struct FilterInterval {
    lo: f64,
    hi: f64,
    valid: bool,
}

fn rd(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x.next_down()
    }
}

fn ru(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.next_up()
    }
}

impl FilterInterval {
    pub fn invalid() -> FilterInterval {
        FilterInterval { lo: f64::NAN, hi: f64::NAN, valid: false }
    }

    /// Exact point interval; invalid for non-finite values.
    pub fn point(v: f64) -> FilterInterval {
        if v.is_finite() {
            FilterInterval { lo: v, hi: v, valid: true }
        } else {
            FilterInterval::invalid()
        }
    }

    /// Encloses `value +- 2^error`. Two outward steps per endpoint absorb
    /// both the conversion truncation and the pad rounding.
    pub fn from_envelope(value: &BigFloat, error: ErrorExp) -> FilterInterval {
        let vf = value.to_f64_trunc();
        if vf.is_nan() {
            return FilterInterval::invalid();
        }
        let pad = match error {
            ErrorExp::Exact => 0.0,
            ErrorExp::Exp(e) => BigFloat::pow2(e).to_f64_trunc(),
        };
        let lo = rd(rd(vf - pad));
        let hi = ru(ru(vf + pad));
        FilterInterval { lo, hi, valid: true }
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// True when both endpoints are finite, so the interval carries a
    /// usable magnitude bound.
    pub fn is_bounded(&self) -> bool {
        self.valid && self.lo.is_finite() && self.hi.is_finite()
    }

    /// True when the interval certifies roughly 40 bits of relative
    /// accuracy, so consumers lose nothing by building on it. Wide
    /// intervals near the underflow threshold fail this even though they
    /// still bound the sign.
    pub fn is_tight(&self) -> bool {
        if !self.is_bounded() {
            return false;
        }
        let width = self.hi - self.lo;
        let mag = self.lo.abs().max(self.hi.abs());
        width <= mag * 2f64.powi(-40)
    }

    /// The endpoints of a valid interval.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        if self.valid {
            Some((self.lo, self.hi))
        } else {
            None
        }
    }

    /// The sign when the interval pins it down: all-positive, all-negative,
    /// or the exact point zero.
    pub fn sign(&self) -> Option<i8> {
        if !self.valid {
            return None;
        }
        if self.lo > 0.0 {
            Some(1)
        } else if self.hi < 0.0 {
            Some(-1)
        } else if self.lo == 0.0 && self.hi == 0.0 {
            Some(0)
        } else {
            None
        }
    }

    /// Lower bound on |value|; zero when the interval straddles zero.
    pub fn abs_lower(&self) -> f64 {
        if !self.valid || (self.lo <= 0.0 && self.hi >= 0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn add(a: &FilterInterval, b: &FilterInterval) -> FilterInterval {
        if !a.valid || !b.valid {
            return FilterInterval::invalid();
        }
        FilterInterval { lo: rd(a.lo + b.lo), hi: ru(a.hi + b.hi), valid: true }
    }

    pub fn sub(a: &FilterInterval, b: &FilterInterval) -> FilterInterval {
        FilterInterval::add(a, &b.neg())
    }

    pub fn neg(&self) -> FilterInterval {
        FilterInterval { lo: -self.hi, hi: -self.lo, valid: self.valid }
    }

    pub fn mul(a: &FilterInterval, b: &FilterInterval) -> FilterInterval {
        if !a.valid || !b.valid {
            return FilterInterval::invalid();
        }
        let ps = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi];
        let lo = ps.iter().copied().map(rd).fold(f64::INFINITY, f64::min);
        let hi = ps.iter().copied().map(ru).fold(f64::NEG_INFINITY, f64::max);
        FilterInterval { lo, hi, valid: true }
    }

    pub fn div(a: &FilterInterval, b: &FilterInterval) -> FilterInterval {
        if !a.valid || !b.valid || (b.lo <= 0.0 && b.hi >= 0.0) {
            return FilterInterval::invalid();
        }
        let qs = [a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi];
        let lo = qs.iter().copied().map(rd).fold(f64::INFINITY, f64::min);
        let hi = qs.iter().copied().map(ru).fold(f64::NEG_INFINITY, f64::max);
        FilterInterval { lo, hi, valid: true }
    }

    pub fn root(&self, k: u32) -> FilterInterval {
        if !self.valid {
            return FilterInterval::invalid();
        }
        if k % 2 == 0 {
            if self.hi < 0.0 {
                // definitely a negative radicand: the exact path will error
                return FilterInterval::invalid();
            }
            // a lower endpoint below zero is clamped: if the expression is
            // well formed the true radicand is nonnegative
            let lo = root_down(self.lo.max(0.0), k);
            let hi = root_up(self.hi, k);
            FilterInterval { lo, hi, valid: true }
        } else {
            let lo = signed_root_down(self.lo, k);
            let hi = signed_root_up(self.hi, k);
            FilterInterval { lo, hi, valid: true }
        }
    }
}

// k-th roots with outward rounding. sqrt is correctly rounded so one ulp
// suffices; powf is not, so a generous relative pad is applied first.
fn root_down(x: f64, k: u32) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::MAX; // any finite radicand has a root below this
    }
    if k == 2 {
        rd(x.sqrt())
    } else {
        rd(x.powf(1.0 / k as f64) * (1.0 - 1e-13))
    }
}

fn root_up(x: f64, k: u32) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if k == 2 {
        ru(x.sqrt())
    } else {
        ru(x.powf(1.0 / k as f64) * (1.0 + 1e-13))
    }
}

fn signed_root_down(x: f64, k: u32) -> f64 {
    if x >= 0.0 {
        root_down(x, k)
    } else {
        -root_up(-x, k)
    }
}

fn signed_root_up(x: f64, k: u32) -> f64 {
    if x >= 0.0 {
        root_up(x, k)
    } else {
        -root_down(-x, k)
    }
}
