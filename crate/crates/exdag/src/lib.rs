//! Exact decisions on real numbers represented as arithmetic expression dags.
//!
//! A [`Real`] is a handle to a node in a shared expression dag built from
//! exact leaves (integers, doubles), the four basic operations, negation and
//! k-th roots. Deciding its sign or guaranteeing an absolute error bound
//! drives just enough bigfloat evaluation to certify the answer: a machine
//! interval filter first, then iteratively refined evaluation, with a
//! separation bound to certify exact zeros. Dags can be restructured before
//! evaluation to reduce operator-tree depth (balancing pure chains, or
//! raising a split node to the root behind a linear fractional form), and
//! evaluation can run on a task pool with one task per bigfloat operation.

pub mod bench;
pub mod bigfloat;
mod envelope;
pub mod error;
pub mod eval;
pub mod filter;
pub mod node;
mod optree;
mod pool;
pub mod restructure;
pub mod sep;

pub use bigfloat::{Approximation, BigFloat, ErrorExp};
pub use error::EvalError;
pub use eval::{EvalConfig, EvalStats, SepPolicy, ACCURACY_FLOOR};
pub use filter::FilterInterval;
pub use node::{KindCounts, NodeKind, Real};
pub use restructure::Strategy;
