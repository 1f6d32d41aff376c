//! Worst-case magnitude lower bounds for nonzero values.
//!
//! Each node carries three ceil-log2 measures derived structurally from the
//! expression: a bound on the conjugates' magnitudes (`log_u`), the matching
//! bound for the inverted value (`log_l`), and a bound on the algebraic
//! degree (`degree_log`, as a log). Together they give an exponent `e` such
//! that a nonzero value satisfies `|value| > 2^e`, which turns "smaller than
//! every accuracy we tried" into a sound zero decision.

use crate::bigfloat::BigFloat;
use crate::error::EvalError;

/// Stands in for log2(0) in the measures; far enough below any real bound
/// that saturating arithmetic keeps it dominant.
const ZERO_LOG: i64 = i64::MIN / 4;

/// Degrees above 2^62 overflow the bound computation; expressions that deep
/// in root nesting must use the nonzero-promise policy instead.
const DEGREE_LOG_MAX: u32 = 62;

#[derive(Clone, Copy, Debug)]
pub struct SeparationParams {
    log_u: i64,
    log_l: i64,
    degree_log: u32,
}

impl SeparationParams {
    /// Measures for an exact dyadic leaf `m * 2^e`.
    pub fn leaf(value: &BigFloat) -> SeparationParams {
        if value.is_zero() {
            return SeparationParams { log_u: ZERO_LOG, log_l: 0, degree_log: 0 };
        }
        let (_, _, e) = value.to_parts();
        let bits = value.mantissa_bits() as i64;
        let (log_u, log_l) = if e >= 0 {
            (bits + e, 0)
        } else {
            (bits, -e)
        };
        SeparationParams { log_u, log_l, degree_log: 0 }
    }

    pub fn add_sub(a: &SeparationParams, b: &SeparationParams) -> SeparationParams {
        SeparationParams {
            log_u: a
                .log_u
                .saturating_add(b.log_l)
                .max(b.log_u.saturating_add(a.log_l))
                .saturating_add(1),
            log_l: a.log_l.saturating_add(b.log_l),
            degree_log: a.degree_log.saturating_add(b.degree_log),
        }
    }

    pub fn mul(a: &SeparationParams, b: &SeparationParams) -> SeparationParams {
        SeparationParams {
            log_u: a.log_u.saturating_add(b.log_u),
            log_l: a.log_l.saturating_add(b.log_l),
            degree_log: a.degree_log.saturating_add(b.degree_log),
        }
    }

    pub fn div(a: &SeparationParams, b: &SeparationParams) -> SeparationParams {
        SeparationParams {
            log_u: a.log_u.saturating_add(b.log_l),
            log_l: a.log_l.saturating_add(b.log_u),
            degree_log: a.degree_log.saturating_add(b.degree_log),
        }
    }

    pub fn neg(a: &SeparationParams) -> SeparationParams {
        *a
    }

    pub fn root(a: &SeparationParams, k: u32) -> SeparationParams {
        debug_assert!(k >= 2);
        let ki = k as i64;
        let num = a.log_u.saturating_add(a.log_l.saturating_mul(ki - 1));
        SeparationParams {
            log_u: num.div_euclid(ki) + i64::from(num.rem_euclid(ki) != 0),
            log_l: a.log_l,
            degree_log: a.degree_log.saturating_add(ceil_log2_u32(k)),
        }
    }

    /// Exponent `e` with `|value| > 2^e` for every nonzero value the
    /// expression can take.
    pub fn sep_exponent(&self) -> Result<i64, EvalError> {
        if self.degree_log > DEGREE_LOG_MAX {
            return Err(EvalError::DegreeOverflow);
        }
        let conjugates = (1i128 << self.degree_log) - 1;
        let v = -(self.log_l as i128 + conjugates * self.log_u as i128) - 1;
        Ok(v.clamp(i64::MIN as i128, i64::MAX as i128) as i64)
    }
}

fn ceil_log2_u32(k: u32) -> u32 {
    32 - (k - 1).leading_zeros()
}
