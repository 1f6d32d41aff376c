#ifndef EXDAG_H
#define EXDAG_H

/* Generated from the Rust sources; edit those instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * How sign decisions treat potential zeros.
 */
typedef enum {
  /**
   * Prove zeros with structural separation bounds.
   */
  EX_SEP_POLICY_PROVE = 0,
  /**
   * Trust the caller that queried values and divisors are nonzero.
   */
  EX_SEP_POLICY_ASSUME_NONZERO = 1,
} ExSepPolicy;

/**
 * Result of any fallible call.
 */
typedef enum {
  /**
   * Success.
   */
  EX_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EX_STATUS_NULL_ARGUMENT,
  /**
   * A leaf was constructed from a NaN or infinite double.
   */
  EX_STATUS_NON_FINITE_INPUT,
  /**
   * A root index below 2 was requested.
   */
  EX_STATUS_INVALID_ROOT_INDEX,
  /**
   * A divisor was decided to be exactly zero.
   */
  EX_STATUS_DIVISION_BY_ZERO,
  /**
   * An even root was taken of a value decided to be negative.
   */
  EX_STATUS_NEGATIVE_RADICAND,
  /**
   * The sign loop hit its accuracy cap without separating the value
   * from zero (possible only under `EX_SEP_POLICY_ASSUME_NONZERO`).
   */
  EX_STATUS_UNDECIDED,
  /**
   * The algebraic-degree bound overflows; no separation bound exists.
   */
  EX_STATUS_DEGREE_OVERFLOW,
  /**
   * Internal invariant violation or caught panic.
   */
  EX_STATUS_INTERNAL,
} ExStatus;

/**
 * DAG restructuring strategy.
 */
typedef enum {
  /**
   * Leave the expression as built.
   */
  EX_STRATEGY_NONE = 0,
  /**
   * Balance associative chains.
   */
  EX_STRATEGY_BALANCE = 1,
  /**
   * Raise deep subterms to the root.
   */
  EX_STRATEGY_RAISE = 2,
  /**
   * Raise, but keep divisions with more than `threshold` additions
   * above them as evaluation barriers.
   */
  EX_STRATEGY_RAISE_BOUNDED = 3,
} ExStrategy;

/**
 * Opaque expression handle.
 */
typedef struct ExReal ExReal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * New leaf holding an exact integer.
 */
ExReal *ex_real_from_i64(int64_t v);

/**
 * New leaf holding the exact value of a finite double.
 */
ExStatus ex_real_from_f64(double v, ExReal **out);

/**
 * Sum of two expressions. Null if either handle is null.
 */
ExReal *ex_real_add(const ExReal *a, const ExReal *b);

/**
 * Difference of two expressions. Null if either handle is null.
 */
ExReal *ex_real_sub(const ExReal *a, const ExReal *b);

/**
 * Product of two expressions. Null if either handle is null.
 */
ExReal *ex_real_mul(const ExReal *a, const ExReal *b);

/**
 * Quotient of two expressions. Construction always succeeds; division
 * by zero surfaces as a status when the value is queried.
 */
ExReal *ex_real_div(const ExReal *a, const ExReal *b);

/**
 * Negation. Null if the handle is null.
 */
ExReal *ex_real_neg(const ExReal *a);

/**
 * Square root. A negative radicand surfaces as a status when queried.
 */
ExReal *ex_real_sqrt(const ExReal *a);

/**
 * k-th root, k >= 2.
 */
ExStatus ex_real_root(const ExReal *a, uint32_t k, ExReal **out);

/**
 * New handle to the same shared expression.
 */
ExReal *ex_real_clone(const ExReal *a);

/**
 * Releases a handle. Null is ignored.
 */
void ex_real_free(ExReal *a);

/**
 * Exact sign of the expression: -1, 0 or +1 into `out_sign`.
 */
ExStatus ex_real_sign(const ExReal *a, ExSepPolicy policy, uint32_t threads, int32_t *out_sign);

/**
 * Approximates the value with absolute error at most 2^accuracy and
 * returns the nearest double below it in magnitude.
 */
ExStatus ex_real_approx_f64(const ExReal *a,
                            int64_t accuracy,
                            ExSepPolicy policy,
                            uint32_t threads,
                            double *out);

/**
 * Rewrites the expression in place; the value is preserved exactly.
 * `threshold` is read only by `EX_STRATEGY_RAISE_BOUNDED`.
 */
ExStatus ex_real_restructure(const ExReal *a, ExStrategy strategy, uint64_t threshold);

/**
 * Number of distinct nodes reachable from the handle; 0 for null.
 */
uint64_t ex_real_node_count(const ExReal *a);

/**
 * Longest root-to-leaf path in edges; 0 for null.
 */
uint64_t ex_real_depth(const ExReal *a);

/**
 * Structure listing, one node per line, children before parents. The
 * returned string must be released with `ex_string_free`. Null on error.
 */
char *ex_real_dump(const ExReal *a);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void ex_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXDAG_H */
