//! Expression nodes, the shared DAG they form, and the `Real` handle API
//! used to build expressions.
//!
//! Nodes are reference counted and shared: cloning a `Real` and reusing it
//! as an operand creates shared subexpressions, not copies. All traversals
//! are iterative so arbitrarily deep expressions neither recurse nor blow
//! the stack on drop.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrd};
use std::sync::Arc;

use parking_lot::Mutex;

use crate::bigfloat::{Approximation, BigFloat, ErrorExp};
use crate::error::EvalError;
use crate::filter::FilterInterval;
use crate::sep::SeparationParams;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeKind {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Root(u32),
}

impl NodeKind {
    pub fn label(&self) -> String {
        match self {
            NodeKind::Leaf => "leaf".into(),
            NodeKind::Add => "add".into(),
            NodeKind::Sub => "sub".into(),
            NodeKind::Mul => "mul".into(),
            NodeKind::Div => "div".into(),
            NodeKind::Neg => "neg".into(),
            NodeKind::Root(k) => format!("root[{k}]"),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            NodeKind::Leaf => 0,
            NodeKind::Neg | NodeKind::Root(_) => 1,
            _ => 2,
        }
    }
}

pub(crate) struct NodeState {
    pub kind: NodeKind,
    pub children: Vec<Arc<Node>>,
    /// Cheap double enclosure of the value; refreshed after evaluations.
    pub filter: FilterInterval,
    /// Best big-number enclosure computed so far.
    pub approx: Option<Approximation>,
    /// Structural bound: |value| <= 2^mag_upper.
    pub mag_upper: Option<i64>,
    /// Known bound 2^msb_lower <= |value|, established when a sign decision
    /// proves the value nonzero.
    pub msb_lower: Option<i64>,
    pub sep: Option<SeparationParams>,
    /// Decided sign, 0 meaning proven zero.
    pub sign_known: Option<i8>,
    /// All divisors and even-root radicands beneath this node are proven
    /// usable (nonzero resp. nonnegative).
    pub divisors_resolved: bool,
    /// Operand count of the operator tree hanging below this node, only
    /// meaningful while a restructuring pass is running.
    pub phi: Option<u64>,
}

pub struct Node {
    /// Incoming DAG edges, counted with multiplicity.
    pub(crate) parent_count: AtomicU32,
    pub(crate) state: Mutex<NodeState>,
}

impl Node {
    pub(crate) fn new_leaf(value: BigFloat) -> Arc<Node> {
        let filter = FilterInterval::from_envelope(&value, ErrorExp::Exact);
        let sign = value.signum();
        let msb = if value.is_zero() { None } else { Some(value.msb()) };
        let sep = SeparationParams::leaf(&value);
        Arc::new(Node {
            parent_count: AtomicU32::new(0),
            state: Mutex::new(NodeState {
                kind: NodeKind::Leaf,
                children: Vec::new(),
                filter,
                approx: Some(Approximation::exact(value)),
                mag_upper: msb.map(|m| m + 1),
                msb_lower: msb,
                sep: Some(sep),
                sign_known: Some(sign),
                divisors_resolved: true,
                phi: None,
            }),
        })
    }

    pub(crate) fn new_op(kind: NodeKind, children: Vec<Arc<Node>>) -> Arc<Node> {
        debug_assert_eq!(children.len(), kind.arity());
        let filter = propagate_filter(kind, &children);
        for c in &children {
            c.parent_count.fetch_add(1, AtomicOrd::Relaxed);
        }
        Arc::new(Node {
            parent_count: AtomicU32::new(0),
            state: Mutex::new(NodeState {
                kind,
                children,
                filter,
                approx: None,
                mag_upper: None,
                msb_lower: None,
                sep: None,
                sign_known: None,
                divisors_resolved: false,
                phi: None,
            }),
        })
    }

    pub(crate) fn kind(&self) -> NodeKind {
        self.state.lock().kind
    }

    pub(crate) fn children(&self) -> Vec<Arc<Node>> {
        self.state.lock().children.clone()
    }
}

/// Filter for a fresh operator node, from its children's filters.
pub(crate) fn propagate_filter(kind: NodeKind, children: &[Arc<Node>]) -> FilterInterval {
    let f = |i: usize| children[i].state.lock().filter;
    match kind {
        NodeKind::Leaf => FilterInterval::invalid(),
        NodeKind::Add => FilterInterval::add(&f(0), &f(1)),
        NodeKind::Sub => FilterInterval::sub(&f(0), &f(1)),
        NodeKind::Mul => FilterInterval::mul(&f(0), &f(1)),
        NodeKind::Div => FilterInterval::div(&f(0), &f(1)),
        NodeKind::Neg => f(0).neg(),
        NodeKind::Root(k) => f(0).root(k),
    }
}

impl Drop for Node {
    // Iterative teardown: child edges are released level by level without
    // recursing, and each released edge decrements the child's parent count.
    fn drop(&mut self) {
        let children = std::mem::take(&mut self.state.get_mut().children);
        for c in &children {
            c.parent_count.fetch_sub(1, AtomicOrd::Relaxed);
        }
        let mut work: Vec<Arc<Node>> = children;
        while let Some(child) = work.pop() {
            if let Some(mut inner) = Arc::into_inner(child) {
                let grandkids = std::mem::take(&mut inner.state.get_mut().children);
                for g in &grandkids {
                    g.parent_count.fetch_sub(1, AtomicOrd::Relaxed);
                }
                work.extend(grandkids);
            }
        }
    }
}

pub(crate) fn ptr_key(n: &Arc<Node>) -> usize {
    Arc::as_ptr(n) as usize
}

/// Canonical bottom-up order: iterative post-order walk, children left to
/// right, each shared node listed once. Parents always come after all their
/// children.
pub(crate) fn topo_order(root: &Arc<Node>) -> Vec<Arc<Node>> {
    let mut out = Vec::new();
    let mut visited = HashSet::new();
    visited.insert(ptr_key(root));
    let mut stack: Vec<(Arc<Node>, usize)> = vec![(root.clone(), 0)];
    while let Some((node, idx)) = stack.last_mut() {
        let child = {
            let st = node.state.lock();
            st.children.get(*idx).cloned()
        };
        match child {
            Some(c) => {
                *idx += 1;
                if visited.insert(ptr_key(&c)) {
                    stack.push((c, 0));
                }
            }
            None => {
                out.push(node.clone());
                stack.pop();
            }
        }
    }
    out
}

/// Longest root-to-leaf path in edges, over the given bottom-up order.
pub(crate) fn depth_of(order: &[Arc<Node>]) -> u64 {
    let mut depths: HashMap<usize, u64> = HashMap::with_capacity(order.len());
    let mut max = 0;
    for node in order {
        let st = node.state.lock();
        let d = st
            .children
            .iter()
            .map(|c| depths[&ptr_key(c)] + 1)
            .max()
            .unwrap_or(0);
        drop(st);
        depths.insert(ptr_key(node), d);
        max = max.max(d);
    }
    max
}

#[derive(Clone, Copy, Default, PartialEq, Eq, Debug)]
pub struct KindCounts {
    pub add: u64,
    pub sub: u64,
    pub mul: u64,
    pub div: u64,
    pub root: u64,
    pub leaf: u64,
    pub neg: u64,
}

pub(crate) fn kind_counts(order: &[Arc<Node>]) -> KindCounts {
    let mut k = KindCounts::default();
    for node in order {
        match node.state.lock().kind {
            NodeKind::Leaf => k.leaf += 1,
            NodeKind::Add => k.add += 1,
            NodeKind::Sub => k.sub += 1,
            NodeKind::Mul => k.mul += 1,
            NodeKind::Div => k.div += 1,
            NodeKind::Neg => k.neg += 1,
            NodeKind::Root(_) => k.root += 1,
        }
    }
    k
}

/// Shared handle to an expression. Clones share the node, so reusing a
/// handle builds a DAG.
#[derive(Clone)]
pub struct Real {
    pub(crate) node: Arc<Node>,
}

impl Real {
    pub fn from_i64(v: i64) -> Real {
        Real { node: Node::new_leaf(BigFloat::from_i64(v)) }
    }

    /// Exact conversion; NaN and infinities are rejected.
    pub fn from_f64(v: f64) -> Result<Real, EvalError> {
        match BigFloat::from_f64(v) {
            Some(b) => Ok(Real { node: Node::new_leaf(b) }),
            None => Err(EvalError::NonFiniteInput),
        }
    }

    pub fn from_bigfloat(v: BigFloat) -> Real {
        Real { node: Node::new_leaf(v) }
    }

    pub fn sqrt(&self) -> Real {
        Real { node: Node::new_op(NodeKind::Root(2), vec![self.node.clone()]) }
    }

    /// k-th root; `k` must be at least 2.
    pub fn root(&self, k: u32) -> Result<Real, EvalError> {
        if k < 2 {
            return Err(EvalError::InvalidRootIndex(k));
        }
        Ok(Real { node: Node::new_op(NodeKind::Root(k), vec![self.node.clone()]) })
    }

    pub fn node_count(&self) -> u64 {
        topo_order(&self.node).len() as u64
    }

    pub fn depth(&self) -> u64 {
        depth_of(&topo_order(&self.node))
    }

    pub fn op_counts(&self) -> KindCounts {
        kind_counts(&topo_order(&self.node))
    }

    /// Deterministic text form, one node per line, children before parents,
    /// ids assigned by topological position:
    /// `{id} {kind} [{child ids}] phi={count|-} parents={n}`.
    pub fn dump(&self) -> String {
        let order = topo_order(&self.node);
        let ids: HashMap<usize, usize> =
            order.iter().enumerate().map(|(i, n)| (ptr_key(n), i + 1)).collect();
        let mut out = String::new();
        for (i, node) in order.iter().enumerate() {
            let st = node.state.lock();
            let kids: Vec<String> =
                st.children.iter().map(|c| ids[&ptr_key(c)].to_string()).collect();
            let phi = match st.phi {
                Some(p) => p.to_string(),
                None => "-".into(),
            };
            let _ = writeln!(
                out,
                "{} {} [{}] phi={} parents={}",
                i + 1,
                st.kind.label(),
                kids.join(" "),
                phi,
                node.parent_count.load(AtomicOrd::Relaxed)
            );
        }
        out
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $kind:expr) => {
        impl std::ops::$trait for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                Real { node: Node::new_op($kind, vec![self.node.clone(), rhs.node.clone()]) }
            }
        }
        impl std::ops::$trait for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl std::ops::$trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl std::ops::$trait<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

binary_op!(Add, add, NodeKind::Add);
binary_op!(Sub, sub, NodeKind::Sub);
binary_op!(Mul, mul, NodeKind::Mul);
binary_op!(Div, div, NodeKind::Div);

impl std::ops::Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real { node: Node::new_op(NodeKind::Neg, vec![self.node.clone()]) }
    }
}

impl std::ops::Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_operands_build_a_dag() {
        let x = Real::from_i64(3);
        let y = &x + &x; // one add, one shared leaf
        assert_eq!(y.node_count(), 2);
        assert_eq!(x.node.parent_count.load(AtomicOrd::Relaxed), 2);
        assert_eq!(y.depth(), 1);
    }

    #[test]
    fn chain_counts_and_depth() {
        let mut acc = Real::from_i64(1);
        for i in 2..=10 {
            acc = &acc * &Real::from_i64(i);
        }
        // 9 muls, 10 leaves
        assert_eq!(acc.node_count(), 19);
        assert_eq!(acc.depth(), 9);
        let k = acc.op_counts();
        assert_eq!((k.mul, k.leaf), (9, 10));
    }

    #[test]
    fn parent_counts_track_edge_multiplicity() {
        let x = Real::from_i64(5);
        let sq = &x * &x;
        assert_eq!(x.node.parent_count.load(AtomicOrd::Relaxed), 2);
        drop(sq);
        assert_eq!(x.node.parent_count.load(AtomicOrd::Relaxed), 0);
    }

    #[test]
    fn deep_drop_does_not_overflow_stack() {
        let mut acc = Real::from_i64(1);
        for _ in 0..200_000 {
            acc = &acc + &Real::from_i64(1);
        }
        drop(acc); // must not recurse
    }

    #[test]
    fn deep_traversals_are_iterative() {
        let mut acc = Real::from_i64(1);
        for _ in 0..100_000 {
            acc = &acc + &Real::from_i64(1);
        }
        assert_eq!(acc.depth(), 100_000);
        assert_eq!(acc.node_count(), 200_001);
    }

    #[test]
    fn topo_order_is_post_order() {
        let a = Real::from_i64(1);
        let b = Real::from_i64(2);
        let s = &a + &b;
        let p = &s * &a; // shared a
        let order = topo_order(&p.node);
        assert_eq!(order.len(), 4);
        // children precede parents; root is last
        assert!(Arc::ptr_eq(order.last().unwrap(), &p.node));
        let idx = |n: &Arc<Node>| order.iter().position(|x| Arc::ptr_eq(x, n)).unwrap();
        assert!(idx(&a.node) < idx(&s.node));
        assert!(idx(&b.node) < idx(&s.node));
        assert!(idx(&s.node) < idx(&p.node));
    }

    #[test]
    fn dump_shape() {
        let x = Real::from_i64(2);
        let r = x.sqrt();
        let d = r.dump();
        let lines: Vec<&str> = d.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "1 leaf [] phi=- parents=1");
        assert!(lines[1].starts_with("2 root[2] [1]"));
    }

    #[test]
    fn root_index_validation() {
        let x = Real::from_i64(2);
        assert!(matches!(x.root(0), Err(EvalError::InvalidRootIndex(0))));
        assert!(matches!(x.root(1), Err(EvalError::InvalidRootIndex(1))));
        assert!(x.root(3).is_ok());
        assert!(Real::from_f64(f64::NAN).is_err());
    }
}
