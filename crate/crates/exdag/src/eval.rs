//! Accuracy-driven evaluation and sign decisions.
//!
//! Demand flows from the queried node down to the leaves: each operator
//! turns its own accuracy target into targets for its children, using
//! structural magnitude bounds, and only nodes whose cached value is too
//! coarse are recomputed, children before parents. Sign queries first try
//! the double filter, then refine with geometrically increasing accuracy
//! until the enclosure separates from zero or falls below the worst-case
//! magnitude of a nonzero value.

use std::collections::HashMap;
use std::sync::Arc;

use crate::bigfloat::{Approximation, BigFloat, ErrorExp};
use crate::envelope::{self, Envelope};
use crate::error::EvalError;
use crate::filter::FilterInterval;
use crate::node::{ptr_key, topo_order, Node, NodeKind, Real};
use crate::pool;
use crate::sep::SeparationParams;

/// Sign queries refuse to refine beyond this accuracy exponent.
pub const ACCURACY_FLOOR: i64 = -(1 << 20);

/// Accuracy of the first refinement round.
const FIRST_ACCURACY: i64 = -52;

/// Operand-size cap for opportunistic exact computation.
const EXACT_BITS_CAP: u64 = 8192;

/// Magnitude-bound exponent used for values proven to be zero.
const ZERO_MAG: i64 = i64::MIN / 4;

/// How zero candidates are handled by sign decisions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SepPolicy {
    /// Prove zeros with structural worst-case magnitude bounds.
    Bfmss,
    /// Trust the caller that queried values and divisors are nonzero;
    /// queries that never separate fail with an iteration limit.
    AssumeNonzero,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalConfig {
    pub sep_policy: SepPolicy,
    /// Worker threads for evaluation; 0 and 1 both mean serial.
    pub threads: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { sep_policy: SepPolicy::Bfmss, threads: 1 }
    }
}

#[derive(Clone, Copy, Default, Debug)]
pub struct EvalStats {
    /// Node computations executed.
    pub tasks: u64,
    /// Peak number of simultaneously ready computations over all plans.
    pub ready_peak: u64,
    /// Refinement rounds run.
    pub rounds: u64,
    /// Sign queries answered by the double filter alone.
    pub filter_decided: u64,
    /// Sign queries answered from an exact cached value.
    pub exact_decided: u64,
    /// Sign queries answered in total, divisor and radicand checks included.
    pub sign_queries: u64,
}

/// The work one evaluation round decided to run: nodes in execution order
/// (children before parents), their targets, and the dependency edges
/// between planned nodes.
pub(crate) struct ExecPlan {
    pub nodes: Vec<Arc<Node>>,
    pub targets: Vec<i64>,
    /// For each planned node, indices of planned nodes it depends on.
    pub dep_children: Vec<Vec<u32>>,
    /// Reverse edges of `dep_children`.
    pub dependents: Vec<Vec<u32>>,
}

impl Real {
    /// The sign of the value: -1, 0 or 1.
    pub fn sign(&self) -> Result<i8, EvalError> {
        Ok(self.sign_with(&EvalConfig::default())?.0)
    }

    pub fn sign_with(&self, cfg: &EvalConfig) -> Result<(i8, EvalStats), EvalError> {
        let mut stats = EvalStats::default();
        prepare(&self.node, cfg, &mut stats)?;
        let s = decide_prepared(&self.node, cfg, &mut stats)?;
        Ok((s, stats))
    }

    /// An enclosure `value +- 2^accuracy` (or better).
    pub fn approximate(&self, accuracy: i64) -> Result<Approximation, EvalError> {
        Ok(self.approximate_with(accuracy, &EvalConfig::default())?.0)
    }

    pub fn approximate_with(
        &self,
        accuracy: i64,
        cfg: &EvalConfig,
    ) -> Result<(Approximation, EvalStats), EvalError> {
        let mut stats = EvalStats::default();
        prepare(&self.node, cfg, &mut stats)?;
        let order = topo_order(&self.node);
        evaluate_prepared(&order, accuracy, cfg, &mut stats);
        let ap = self.node.state.lock().approx.clone().expect("value just computed");
        Ok((ap, stats))
    }
}

/// Bottom-up validity pass: decides divisor and radicand signs, computes
/// separation measures (under the proving policy) and structural magnitude
/// bounds. Idempotent; prepared nodes are skipped.
pub(crate) fn prepare(
    root: &Arc<Node>,
    cfg: &EvalConfig,
    stats: &mut EvalStats,
) -> Result<(), EvalError> {
    let order = topo_order(root);
    // envelopes live only for the duration of this pass; cached signs and
    // magnitude bounds distilled from them persist on the nodes
    let mut envs: HashMap<usize, Envelope> = HashMap::new();
    for node in &order {
        let (kind, children, done) = {
            let st = node.state.lock();
            // a subtree prepared under the nonzero-promise policy still
            // lacks separation measures; revisit it for the proving policy
            let done = st.divisors_resolved
                && (cfg.sep_policy != SepPolicy::Bfmss || st.sep.is_some());
            (st.kind, st.children.clone(), done)
        };
        if done {
            continue;
        }
        match kind {
            NodeKind::Div => {
                let s = decide_prepared(&children[1], cfg, stats)?;
                if s == 0 {
                    return Err(EvalError::DivisionByZero);
                }
            }
            NodeKind::Root(k) => {
                let s = decide_prepared(&children[0], cfg, stats)?;
                if k % 2 == 0 && s < 0 {
                    return Err(EvalError::NegativeRadicand);
                }
                if s == 0 {
                    let mut st = node.state.lock();
                    st.sign_known = Some(0);
                    st.approx = Some(Approximation::exact(BigFloat::zero()));
                }
            }
            _ => {}
        }
        // second-stage filter: when the double interval cannot certify a
        // sign and a sharp magnitude, build an exact envelope so values
        // outside comfortable double range still get cheap signs and bounds
        let mut env_mag: Option<i64> = None;
        if kind != NodeKind::Leaf {
            let filter_ok = {
                let st = node.state.lock();
                st.approx.is_some() || st.filter.is_tight()
            };
            if !filter_ok {
                let kids: Vec<Envelope> = children.iter().map(|c| env_of(c, &envs)).collect();
                if let Some(env) = envelope::compute(kind, &kids) {
                    env_mag = Some(env.mag_exp().unwrap_or(ZERO_MAG));
                    if env.separated() || (env.value.is_zero() && env.radius.is_zero()) {
                        let ap = Approximation { value: env.value.clone(), error: env.radius_exp() };
                        node.state.lock().approx = Some(ap);
                    }
                    envs.insert(ptr_key(node), env);
                }
            }
        }
        let sep = if cfg.sep_policy == SepPolicy::Bfmss {
            Some(match kind {
                NodeKind::Leaf => {
                    let st = node.state.lock();
                    SeparationParams::leaf(&st.approx.as_ref().expect("leaf value").value)
                }
                _ => {
                    let kid = |i: usize| {
                        children[i].state.lock().sep.expect("child separation measures")
                    };
                    match kind {
                        NodeKind::Add | NodeKind::Sub => SeparationParams::add_sub(&kid(0), &kid(1)),
                        NodeKind::Mul => SeparationParams::mul(&kid(0), &kid(1)),
                        NodeKind::Div => SeparationParams::div(&kid(0), &kid(1)),
                        NodeKind::Neg => SeparationParams::neg(&kid(0)),
                        NodeKind::Root(k) => SeparationParams::root(&kid(0), k),
                        NodeKind::Leaf => unreachable!(),
                    }
                }
            })
        } else {
            None
        };
        let mag = structural_mag_upper(kind, &children, node);
        let mag = env_mag.map_or(mag, |e| mag.min(e));
        let mut st = node.state.lock();
        if sep.is_some() {
            st.sep = sep;
        }
        st.mag_upper = Some(mag);
        st.divisors_resolved = true;
    }
    Ok(())
}

/// The envelope of an already prepared node: the side table first, then a
/// cached approximation, then the double interval, then the structural
/// magnitude bound.
fn env_of(node: &Arc<Node>, envs: &HashMap<usize, Envelope>) -> Envelope {
    if let Some(e) = envs.get(&ptr_key(node)) {
        return e.clone();
    }
    let st = node.state.lock();
    if let Some(ap) = &st.approx {
        let radius = match ap.error {
            ErrorExp::Exact => BigFloat::zero(),
            ErrorExp::Exp(e) => BigFloat::pow2(e),
        };
        return Envelope { value: ap.value.clone(), radius };
    }
    if st.filter.is_tight() {
        let (lo, hi) = st.filter.bounds().expect("tight interval is valid");
        let lo = BigFloat::from_f64(lo).expect("finite endpoint");
        let hi = BigFloat::from_f64(hi).expect("finite endpoint");
        let half = BigFloat::pow2(-1);
        let mid = BigFloat::mul(&BigFloat::add(&lo, &hi, ErrorExp::Exact), &half, ErrorExp::Exact);
        let rad = BigFloat::mul(&BigFloat::sub(&hi, &lo, ErrorExp::Exact), &half, ErrorExp::Exact);
        return Envelope { value: mid, radius: rad };
    }
    Envelope::magnitude_only(st.mag_upper.expect("child magnitude bound"))
}

/// Exponent `u` with `|value| <= 2^u`, from the children's bounds.
fn structural_mag_upper(kind: NodeKind, children: &[Arc<Node>], node: &Arc<Node>) -> i64 {
    let kid_mag = |i: usize| -> i64 {
        let st = children[i].state.lock();
        if st.sign_known == Some(0) {
            ZERO_MAG
        } else {
            st.mag_upper.expect("child magnitude bound")
        }
    };
    match kind {
        NodeKind::Leaf => {
            let st = node.state.lock();
            let v = &st.approx.as_ref().expect("leaf value").value;
            if v.is_zero() {
                ZERO_MAG
            } else {
                v.msb() + 1
            }
        }
        NodeKind::Add | NodeKind::Sub => kid_mag(0).max(kid_mag(1)).saturating_add(1),
        NodeKind::Mul => kid_mag(0).saturating_add(kid_mag(1)),
        NodeKind::Div => {
            let ml = children[1].state.lock().msb_lower.expect("divisor magnitude floor");
            kid_mag(0).saturating_sub(ml)
        }
        NodeKind::Neg => kid_mag(0),
        NodeKind::Root(k) => {
            let u = kid_mag(0);
            let ki = k as i64;
            // ceil(u / k) keeps |x|^(1/k) <= 2^result for either sign of u
            u.div_euclid(ki) + i64::from(u.rem_euclid(ki) != 0)
        }
    }
}

/// Sign decision for a node whose subtree has been prepared.
fn decide_prepared(
    node: &Arc<Node>,
    cfg: &EvalConfig,
    stats: &mut EvalStats,
) -> Result<i8, EvalError> {
    if let Some(s) = node.state.lock().sign_known {
        return Ok(s);
    }
    stats.sign_queries += 1;
    let filter_sign = node.state.lock().filter.sign();
    if let Some(s) = filter_sign {
        stats.filter_decided += 1;
        let mut st = node.state.lock();
        st.sign_known = Some(s);
        if s != 0 {
            // the filter's distance from zero is an exact double, so its
            // msb is a sound magnitude floor
            let lo = BigFloat::from_f64(st.filter.abs_lower());
            if let Some(lo) = lo {
                if !lo.is_zero() {
                    st.msb_lower = Some(st.msb_lower.unwrap_or(i64::MIN).max(lo.msb()));
                }
            }
        } else {
            st.approx = Some(Approximation::exact(BigFloat::zero()));
        }
        return Ok(s);
    }
    // the envelope pass or an earlier evaluation may have cached an
    // enclosure that already pins the sign
    let cached = node.state.lock().approx.clone();
    if let Some(ap) = cached {
        if ap.is_exact() {
            stats.exact_decided += 1;
            let s = ap.value.signum();
            finish_sign(node, s, &ap);
            return Ok(s);
        }
        if ap.separated_from_zero() {
            let s = ap.value.signum();
            finish_sign(node, s, &ap);
            return Ok(s);
        }
    }
    let order = topo_order(node);
    // a sign needs relative, not absolute, accuracy: anchoring the schedule
    // to the magnitude bound lets very large values separate after a cheap
    // low-precision round instead of a needlessly deep absolute one
    let mut hi = node.state.lock().mag_upper.expect("magnitude bound prepared");
    let mut offset = -FIRST_ACCURACY;
    loop {
        let q = hi.saturating_sub(offset);
        if q < ACCURACY_FLOOR {
            if cfg.sep_policy == SepPolicy::Bfmss {
                let sep = sep_exponent_of(node)?;
                if hi < sep {
                    // |value| <= 2^hi < 2^sep, below every nonzero value
                    return Ok(declare_zero(node));
                }
            }
            return Err(EvalError::IterationLimit { accuracy: q });
        }
        stats.rounds += 1;
        evaluate_prepared(&order, q, cfg, stats);
        let ap = node.state.lock().approx.clone().expect("value just computed");
        if ap.is_exact() {
            stats.exact_decided += 1;
            let s = ap.value.signum();
            finish_sign(node, s, &ap);
            return Ok(s);
        }
        if ap.separated_from_zero() {
            let s = ap.value.signum();
            finish_sign(node, s, &ap);
            return Ok(s);
        }
        if cfg.sep_policy == SepPolicy::Bfmss {
            let sep = sep_exponent_of(node)?;
            if q < sep {
                // |value| <= 2^(q+1) <= 2^sep, below every nonzero value
                return Ok(declare_zero(node));
            }
        }
        if let Some(mu) = ap.msb_upper() {
            hi = hi.min(mu.saturating_add(1));
        }
        offset = offset.saturating_mul(2);
    }
}

fn sep_exponent_of(node: &Arc<Node>) -> Result<i64, EvalError> {
    node.state.lock().sep.expect("separation measures prepared").sep_exponent()
}

fn declare_zero(node: &Arc<Node>) -> i8 {
    let mut st = node.state.lock();
    st.sign_known = Some(0);
    st.approx = Some(Approximation::exact(BigFloat::zero()));
    0
}

fn finish_sign(node: &Arc<Node>, s: i8, ap: &Approximation) {
    let mut st = node.state.lock();
    st.sign_known = Some(s);
    if s != 0 {
        if let Some(ml) = ap.msb_lower() {
            st.msb_lower = Some(st.msb_lower.unwrap_or(i64::MIN).max(ml));
        }
    }
}

/// One evaluation round: plan which nodes need recomputing to give the last
/// node of `order` accuracy 2^accuracy, then run the plan.
fn evaluate_prepared(order: &[Arc<Node>], accuracy: i64, cfg: &EvalConfig, stats: &mut EvalStats) {
    let n = order.len();
    let pos: HashMap<usize, usize> =
        order.iter().enumerate().map(|(i, nd)| (ptr_key(nd), i)).collect();
    let mut required: Vec<Option<i64>> = vec![None; n];
    required[n - 1] = Some(accuracy);
    let mut exec: Vec<usize> = Vec::new();
    for i in (0..n).rev() {
        let Some(t) = required[i] else { continue };
        let node = &order[i];
        let mut st = node.state.lock();
        // fold fresh value knowledge into the bounds used for planning
        if let Some(ap) = st.approx.clone() {
            if st.sign_known != Some(0) {
                if let Some(mu) = ap.msb_upper() {
                    let refined = mu.saturating_add(1);
                    st.mag_upper = Some(st.mag_upper.map_or(refined, |m| m.min(refined)));
                }
            }
            if matches!(st.sign_known, Some(1) | Some(-1)) {
                if let Some(ml) = ap.msb_lower() {
                    st.msb_lower = Some(st.msb_lower.unwrap_or(i64::MIN).max(ml));
                }
            }
        }
        let clean = st.approx.as_ref().is_some_and(|ap| ap.error <= ErrorExp::Exp(t));
        if clean {
            continue;
        }
        if st.sign_known == Some(0) {
            st.approx = Some(Approximation::exact(BigFloat::zero()));
            continue;
        }
        let kind = st.kind;
        let children = st.children.clone();
        drop(st);
        // a proven-zero operand zeroes products and quotients outright
        let child_sign = |i: usize| children[i].state.lock().sign_known;
        let zero_result = match kind {
            NodeKind::Mul => child_sign(0) == Some(0) || child_sign(1) == Some(0),
            NodeKind::Div => child_sign(0) == Some(0),
            _ => false,
        };
        if zero_result {
            let mut st = node.state.lock();
            st.sign_known = Some(0);
            st.approx = Some(Approximation::exact(BigFloat::zero()));
            continue;
        }
        debug_assert!(kind != NodeKind::Leaf, "leaves always hold exact values");
        exec.push(i);
        for (child, demand) in child_demands(kind, t, &children) {
            let p = pos[&ptr_key(child)];
            required[p] = Some(required[p].map_or(demand, |e| e.min(demand)));
        }
    }
    exec.reverse();
    let nodes: Vec<Arc<Node>> = exec.iter().map(|&i| order[i].clone()).collect();
    let targets: Vec<i64> = exec.iter().map(|&i| required[i].unwrap()).collect();
    let exec_pos: HashMap<usize, u32> =
        nodes.iter().enumerate().map(|(i, nd)| (ptr_key(nd), i as u32)).collect();
    let mut dep_children: Vec<Vec<u32>> = Vec::with_capacity(nodes.len());
    let mut dependents: Vec<Vec<u32>> = vec![Vec::new(); nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        let st = node.state.lock();
        let deps: Vec<u32> = st
            .children
            .iter()
            .filter_map(|c| exec_pos.get(&ptr_key(c)).copied())
            .collect();
        drop(st);
        for &d in &deps {
            dependents[d as usize].push(i as u32);
        }
        dep_children.push(deps);
    }
    // deterministic parallelism profile: peak width of the dependency waves
    let mut level: Vec<u32> = vec![0; nodes.len()];
    let mut width: HashMap<u32, u64> = HashMap::new();
    for i in 0..nodes.len() {
        let l = dep_children[i].iter().map(|&d| level[d as usize] + 1).max().unwrap_or(0);
        level[i] = l;
        *width.entry(l).or_insert(0) += 1;
    }
    let peak = width.values().copied().max().unwrap_or(0);
    stats.tasks += nodes.len() as u64;
    stats.ready_peak = stats.ready_peak.max(peak);
    let plan = ExecPlan { nodes, targets, dep_children, dependents };
    if cfg.threads <= 1 {
        for (node, &t) in plan.nodes.iter().zip(&plan.targets) {
            compute_node(node, t);
        }
    } else {
        pool::run_plan(&plan, cfg.threads);
    }
}

/// Accuracy demands for the children of a node computed to target `t`.
/// Child errors plus the operation's own error stay within 2^t.
fn child_demands(kind: NodeKind, t: i64, children: &[Arc<Node>]) -> Vec<(&Arc<Node>, i64)> {
    let mag = |i: usize| -> i64 { children[i].state.lock().mag_upper.expect("magnitude bound") };
    let floor = |i: usize| -> i64 { children[i].state.lock().msb_lower.expect("magnitude floor") };
    match kind {
        NodeKind::Leaf => Vec::new(),
        NodeKind::Add | NodeKind::Sub => {
            vec![(&children[0], t - 2), (&children[1], t - 2)]
        }
        NodeKind::Neg => vec![(&children[0], t)],
        NodeKind::Mul => {
            let (ux, uy) = (mag(0), mag(1));
            vec![
                (&children[0], t.saturating_sub(uy).saturating_sub(3)),
                (&children[1], t.saturating_sub(ux).saturating_sub(3)),
            ]
        }
        NodeKind::Div => {
            let ux = mag(0);
            let ml = floor(1);
            let ty = t
                .saturating_sub(4)
                .saturating_sub(ux)
                .saturating_add(ml.saturating_mul(2))
                .min(ml - 1);
            vec![(&children[0], t.saturating_add(ml).saturating_sub(3)), (&children[1], ty)]
        }
        NodeKind::Root(k) => {
            let ml = floor(0);
            let ki = k as i64;
            let gain = (ki - 1).saturating_mul(ml - 1).div_euclid(ki);
            let tx = t.saturating_sub(1).saturating_add(gain).min(ml - 1);
            vec![(&children[0], tx)]
        }
    }
}

/// Computes one node's value from its children's current values, meeting
/// absolute error 2^t, and refreshes the node's filter. Exact inputs of
/// moderate size propagate exactness through the closed operations.
pub(crate) fn compute_node(node: &Arc<Node>, t: i64) {
    let (kind, children) = {
        let st = node.state.lock();
        (st.kind, st.children.clone())
    };
    let kids: Vec<Approximation> = children
        .iter()
        .map(|c| c.state.lock().approx.clone().expect("child value ready"))
        .collect();
    let closed = matches!(kind, NodeKind::Add | NodeKind::Sub | NodeKind::Mul | NodeKind::Neg);
    let exact_ok = closed
        && kids.iter().all(|k| k.is_exact())
        && kids.iter().all(|k| k.value.mantissa_bits() <= EXACT_BITS_CAP);
    let result = if exact_ok {
        let v = match kind {
            NodeKind::Add => BigFloat::add(&kids[0].value, &kids[1].value, ErrorExp::Exact),
            NodeKind::Sub => BigFloat::sub(&kids[0].value, &kids[1].value, ErrorExp::Exact),
            NodeKind::Mul => BigFloat::mul(&kids[0].value, &kids[1].value, ErrorExp::Exact),
            NodeKind::Neg => kids[0].value.neg(),
            _ => unreachable!(),
        };
        Approximation::exact(v)
    } else {
        let op_t = ErrorExp::Exp(t - 1);
        match kind {
            NodeKind::Add => {
                Approximation::new(BigFloat::add(&kids[0].value, &kids[1].value, op_t), ErrorExp::Exp(t))
            }
            NodeKind::Sub => {
                Approximation::new(BigFloat::sub(&kids[0].value, &kids[1].value, op_t), ErrorExp::Exp(t))
            }
            NodeKind::Mul => {
                if kids.iter().any(|k| k.is_exact() && k.value.is_zero()) {
                    Approximation::exact(BigFloat::zero())
                } else {
                    Approximation::new(
                        BigFloat::mul(&kids[0].value, &kids[1].value, op_t),
                        ErrorExp::Exp(t),
                    )
                }
            }
            NodeKind::Div => {
                if kids[0].is_exact() && kids[0].value.is_zero() {
                    Approximation::exact(BigFloat::zero())
                } else {
                    Approximation::new(
                        BigFloat::div(&kids[0].value, &kids[1].value, t - 1),
                        ErrorExp::Exp(t),
                    )
                }
            }
            NodeKind::Neg => Approximation::new(kids[0].value.neg(), kids[0].error),
            NodeKind::Root(k) => {
                Approximation::new(BigFloat::root(&kids[0].value, k, t - 1), ErrorExp::Exp(t))
            }
            NodeKind::Leaf => unreachable!(),
        }
    };
    let filter = FilterInterval::from_envelope(&result.value, result.error);
    let mut st = node.state.lock();
    if filter.is_valid() {
        st.filter = filter;
    }
    st.approx = Some(result);
}
