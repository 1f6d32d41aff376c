//! DAG restructuring: depth reduction that preserves every value exactly.
//!
//! Two families are provided. Chain balancing rewrites pure sum chains
//! (`Add`/`Sub`/`Neg`) and pure product chains as balanced binary trees
//! without changing the operand order or increasing the operation count.
//! Root raising walks an operator tree's heaviest path, splits it near the
//! operand midpoint, and collapses the nodes above the split into the
//! linear fractional form `(A*X + B) / (C*X + D)`, then recurses into the
//! coefficient trees and the split subtree. Raising trades a long path for
//! a few extra nodes; balancing keeps counts but only helps uniform chains.
//!
//! All rewrites happen in place: a tree's root keeps its identity (and any
//! cached enclosures, which stay valid because the value is unchanged), so
//! parents and shared references never need fixing up.

use std::collections::HashSet;
use std::sync::atomic::Ordering as AtomicOrd;
use std::sync::Arc;

use crate::bigfloat::BigFloat;
use crate::node::{ptr_key, Node, NodeKind, Real};
use crate::optree::{annotate_phi, find_tree_roots, is_member_child, is_operator};

/// Restructuring strategy selector.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Strategy {
    /// Leave the DAG as built.
    Def,
    /// Balance pure sum and product chains.
    Amb,
    /// Raise split points toward the root, recursively.
    Mtr,
    /// Like `Mtr`, and additionally split at a division reached after more
    /// than `k` additions or subtractions since the last division above it.
    MtrK(u64),
}

impl Real {
    /// Rewrites the DAG below this handle per `strategy`. Values are
    /// preserved exactly; only shape changes. Single threaded.
    pub fn restructure(&self, strategy: Strategy) {
        match strategy {
            Strategy::Def => {}
            Strategy::Amb => amb_all(&self.node),
            Strategy::Mtr => mtr_all(&self.node, u64::MAX),
            Strategy::MtrK(k) => mtr_all(&self.node, k),
        }
    }
}

/// Operand count below which a tree or chain is left alone.
const MIN_PHI: u64 = 3;

// ---------------------------------------------------------------------------
// In-place node replacement

/// Replaces `root`'s operation with the one of `built`, a freshly
/// constructed unshared node of equal value. Old child edges are released;
/// `built`'s child edges transfer as-is, so all parent counts stay correct.
fn replace_with(root: &Arc<Node>, built: Arc<Node>) {
    debug_assert!(!Arc::ptr_eq(root, &built));
    debug_assert_eq!(built.parent_count.load(AtomicOrd::Relaxed), 0);
    let old = {
        let mut st = root.state.lock();
        std::mem::take(&mut st.children)
    };
    for c in &old {
        c.parent_count.fetch_sub(1, AtomicOrd::Relaxed);
    }
    let (kind, kids) = {
        let mut bst = built.state.lock();
        (bst.kind, std::mem::take(&mut bst.children))
    };
    {
        let mut st = root.state.lock();
        st.kind = kind;
        st.children = kids;
        // New interior nodes may hold fresh divisions or radicals.
        st.divisors_resolved = false;
        st.phi = None;
    }
    // `old` drops here; unreferenced interior nodes of the former shape are
    // released, decrementing their children's counts on the way down.
}

// ---------------------------------------------------------------------------
// Chain balancing

#[derive(Clone, Copy, PartialEq, Eq)]
enum ChainClass {
    Sum,
    Prod,
}

fn class_of(kind: NodeKind) -> Option<ChainClass> {
    match kind {
        NodeKind::Add | NodeKind::Sub | NodeKind::Neg => Some(ChainClass::Sum),
        NodeKind::Mul => Some(ChainClass::Prod),
        _ => None,
    }
}

fn chain_member(child: &Arc<Node>, class: ChainClass) -> bool {
    class_of(child.kind()) == Some(class)
        && child.parent_count.load(AtomicOrd::Relaxed) == 1
}

/// Roots of all maximal single-class chains reachable from `root`, in
/// deterministic discovery order.
fn find_chain_roots(root: &Arc<Node>) -> Vec<(Arc<Node>, ChainClass)> {
    let mut out = Vec::new();
    let mut seen: HashSet<usize> = HashSet::new();
    let mut cand = vec![root.clone()];
    seen.insert(ptr_key(root));
    while let Some(n) = cand.pop() {
        match class_of(n.kind()) {
            Some(cl) => {
                out.push((n.clone(), cl));
                let mut stack = vec![n];
                while let Some(m) = stack.pop() {
                    for c in m.children() {
                        if chain_member(&c, cl) {
                            stack.push(c);
                        } else if seen.insert(ptr_key(&c)) {
                            cand.push(c);
                        }
                    }
                }
            }
            None => {
                for c in n.children() {
                    if seen.insert(ptr_key(&c)) {
                        cand.push(c);
                    }
                }
            }
        }
    }
    out
}

/// Chain operands left to right. For sum chains the flag records a negated
/// contribution; product operands are never flagged.
fn chain_operands(root: &Arc<Node>, class: ChainClass) -> Vec<(Arc<Node>, bool)> {
    let mut out = Vec::new();
    let mut stack: Vec<(Arc<Node>, bool, bool)> = vec![(root.clone(), false, true)];
    while let Some((n, neg, interior)) = stack.pop() {
        if !interior {
            out.push((n, neg));
            continue;
        }
        let kids = n.children();
        let entry = |c: &Arc<Node>, neg: bool| {
            let inner = chain_member(c, class);
            (c.clone(), neg, inner)
        };
        match n.kind() {
            NodeKind::Add | NodeKind::Mul => {
                stack.push(entry(&kids[1], neg));
                stack.push(entry(&kids[0], neg));
            }
            NodeKind::Sub => {
                stack.push(entry(&kids[1], !neg));
                stack.push(entry(&kids[0], neg));
            }
            NodeKind::Neg => stack.push(entry(&kids[0], !neg)),
            _ => unreachable!("chain interiors are sum or product nodes"),
        }
    }
    out
}

/// Balanced signed combination preserving operand order. The returned flag
/// carries an overall negation outward instead of materializing it, so the
/// operation count never grows.
fn build_signed(ops: &[(Arc<Node>, bool)]) -> (Arc<Node>, bool) {
    if ops.len() == 1 {
        return (ops[0].0.clone(), ops[0].1);
    }
    let mid = ops.len().div_ceil(2);
    let (ln, ls) = build_signed(&ops[..mid]);
    let (rn, rs) = build_signed(&ops[mid..]);
    let kind = if ls == rs { NodeKind::Add } else { NodeKind::Sub };
    (Node::new_op(kind, vec![ln, rn]), ls)
}

fn build_product(ops: &[(Arc<Node>, bool)]) -> Arc<Node> {
    if ops.len() == 1 {
        return ops[0].0.clone();
    }
    let mid = ops.len().div_ceil(2);
    let l = build_product(&ops[..mid]);
    let r = build_product(&ops[mid..]);
    Node::new_op(NodeKind::Mul, vec![l, r])
}

fn balance_chain(root: &Arc<Node>, class: ChainClass) {
    let ops = chain_operands(root, class);
    if (ops.len() as u64) < MIN_PHI {
        return;
    }
    let built = match class {
        ChainClass::Prod => build_product(&ops),
        ChainClass::Sum => {
            let (n, neg) = build_signed(&ops);
            if neg {
                // A leading negated operand implies the old chain held a
                // negation, so the wrap keeps the count non-increasing.
                Node::new_op(NodeKind::Neg, vec![n])
            } else {
                n
            }
        }
    };
    replace_with(root, built);
}

fn amb_all(root: &Arc<Node>) {
    for (r, cl) in find_chain_roots(root) {
        balance_chain(&r, cl);
    }
}

// ---------------------------------------------------------------------------
// Root raising

/// Linear fractional coefficient. `Zero` and `One` stay symbolic so trivial
/// products and sums never materialize.
#[derive(Clone)]
enum Coef {
    Zero,
    One,
    Node(Arc<Node>),
}

impl Coef {
    fn is_zero(&self) -> bool {
        matches!(self, Coef::Zero)
    }

    fn is_one(&self) -> bool {
        matches!(self, Coef::One)
    }

    fn materialize(&self) -> Arc<Node> {
        match self {
            Coef::Zero => Node::new_leaf(BigFloat::from_i64(0)),
            Coef::One => Node::new_leaf(BigFloat::from_i64(1)),
            Coef::Node(n) => n.clone(),
        }
    }
}

/// `e * c`.
fn cmul(e: &Arc<Node>, c: &Coef) -> Coef {
    match c {
        Coef::Zero => Coef::Zero,
        Coef::One => Coef::Node(e.clone()),
        Coef::Node(n) => {
            Coef::Node(Node::new_op(NodeKind::Mul, vec![e.clone(), n.clone()]))
        }
    }
}

/// `x + y`.
fn cadd(x: Coef, y: Coef) -> Coef {
    match (x, y) {
        (Coef::Zero, y) => y,
        (x, Coef::Zero) => x,
        (x, y) => {
            Coef::Node(Node::new_op(NodeKind::Add, vec![x.materialize(), y.materialize()]))
        }
    }
}

/// `x - y`.
fn csub(x: Coef, y: Coef) -> Coef {
    match (x, y) {
        (x, Coef::Zero) => x,
        (Coef::Zero, y) => cneg(y),
        (x, y) => {
            Coef::Node(Node::new_op(NodeKind::Sub, vec![x.materialize(), y.materialize()]))
        }
    }
}

/// `-x`.
fn cneg(x: Coef) -> Coef {
    match x {
        Coef::Zero => Coef::Zero,
        Coef::One => Coef::Node(Node::new_leaf(BigFloat::from_i64(-1))),
        Coef::Node(n) => Coef::Node(Node::new_op(NodeKind::Neg, vec![n])),
    }
}

/// Form `(a*x + b) / (c*x + d)` accumulated while walking up a path.
struct Form {
    a: Coef,
    b: Coef,
    c: Coef,
    d: Coef,
}

impl Form {
    fn identity() -> Form {
        Form { a: Coef::One, b: Coef::Zero, c: Coef::Zero, d: Coef::One }
    }

    /// Folds `node` (whose path child sits at `idx`) into the form. `e` is
    /// the sibling subexpression, absent for negation.
    fn incorporate(&mut self, kind: NodeKind, idx: usize, e: Option<&Arc<Node>>) {
        match kind {
            NodeKind::Add => {
                let e = e.unwrap();
                self.a = cadd(self.a.clone(), cmul(e, &self.c));
                self.b = cadd(self.b.clone(), cmul(e, &self.d));
            }
            NodeKind::Sub => {
                let e = e.unwrap();
                if idx == 0 {
                    self.a = csub(self.a.clone(), cmul(e, &self.c));
                    self.b = csub(self.b.clone(), cmul(e, &self.d));
                } else {
                    self.a = csub(cmul(e, &self.c), self.a.clone());
                    self.b = csub(cmul(e, &self.d), self.b.clone());
                }
            }
            NodeKind::Mul => {
                let e = e.unwrap();
                self.a = cmul(e, &self.a);
                self.b = cmul(e, &self.b);
            }
            NodeKind::Div => {
                let e = e.unwrap();
                if idx == 0 {
                    self.c = cmul(e, &self.c);
                    self.d = cmul(e, &self.d);
                } else {
                    std::mem::swap(&mut self.a, &mut self.c);
                    std::mem::swap(&mut self.b, &mut self.d);
                    self.a = cmul(e, &self.a);
                    self.b = cmul(e, &self.b);
                }
            }
            NodeKind::Neg => {
                self.a = cneg(self.a.clone());
                self.b = cneg(self.b.clone());
            }
            _ => unreachable!("only arithmetic nodes are incorporated"),
        }
    }

    /// Numerator `a*x + b` with trivial slots elided.
    fn build_half(a: &Coef, b: &Coef, x: &Arc<Node>) -> Arc<Node> {
        let ax = match a {
            Coef::Zero => None,
            Coef::One => Some(x.clone()),
            Coef::Node(n) => {
                Some(Node::new_op(NodeKind::Mul, vec![n.clone(), x.clone()]))
            }
        };
        match (ax, b) {
            (Some(n), Coef::Zero) => n,
            (Some(n), b) => Node::new_op(NodeKind::Add, vec![n, b.materialize()]),
            (None, b) => b.materialize(),
        }
    }

    /// Replacement expression for the whole path, rooted at a fresh node.
    /// The division is omitted when the denominator is the constant one.
    fn build(&self, x: &Arc<Node>) -> Arc<Node> {
        let num = Form::build_half(&self.a, &self.b, x);
        if self.c.is_zero() && self.d.is_one() {
            num
        } else {
            let den = Form::build_half(&self.c, &self.d, x);
            Node::new_op(NodeKind::Div, vec![num, den])
        }
    }
}

/// Raises the tree rooted at `root` (whose operand count is already
/// annotated and at least `MIN_PHI`): finds the split point on the critical
/// path, collapses the path into a linear fractional form, and installs the
/// rebuilt expression in place. Subtrees to process next are pushed onto
/// `follow` so they pop in coefficient-then-split order.
fn raise_tree(root: &Arc<Node>, k: u64, follow: &mut Vec<Arc<Node>>) {
    let phi_root = root.state.lock().phi.expect("tree root is annotated");
    debug_assert!(phi_root >= MIN_PHI);

    // Descend along the heavier child (leftmost on ties; operand edges
    // weigh 1) until the split condition fires. The counter tracks
    // additions and subtractions crossed since the last division.
    let mut path: Vec<(Arc<Node>, usize)> = Vec::new();
    let mut counter: u64 = 0;
    let mut current = root.clone();
    let split = loop {
        match current.kind() {
            NodeKind::Add | NodeKind::Sub => counter += 1,
            NodeKind::Div => counter = 0,
            _ => {}
        }
        let children = current.children();
        let mut best = 0usize;
        let mut best_phi = 0u64;
        for (i, c) in children.iter().enumerate() {
            let w = if is_member_child(c) {
                c.state.lock().phi.expect("members are annotated")
            } else {
                1
            };
            if w > best_phi {
                best_phi = w;
                best = i;
            }
        }
        let child = children[best].clone();
        path.push((current.clone(), best));
        let member = is_member_child(&child);
        let at_midpoint = 2 * best_phi <= phi_root;
        let at_division = member && child.kind() == NodeKind::Div && counter > k;
        if at_midpoint || at_division {
            break child;
        }
        debug_assert!(member, "operand edges always satisfy the midpoint rule");
        current = child;
    };

    // Fold the path bottom-up into (a*x + b) / (c*x + d).
    let mut form = Form::identity();
    for (node, idx) in path.iter().rev() {
        let kind = node.kind();
        let children = node.children();
        let e = if kind == NodeKind::Neg { None } else { Some(&children[1 - idx]) };
        form.incorporate(kind, *idx, e);
    }

    let built = form.build(&split);
    if Arc::ptr_eq(&built, &split) {
        // Degenerate identity form; nothing changed above the split.
        follow.push(split);
        return;
    }
    replace_with(root, built);

    // Recurse on A, B, C, D, then the split subtree (popped in that order).
    follow.push(split);
    for coef in [&form.d, &form.c, &form.b, &form.a] {
        if let Coef::Node(n) = coef {
            follow.push(n.clone());
        }
    }
}

fn mtr_all(root: &Arc<Node>, k: u64) {
    let mut processed: HashSet<usize> = HashSet::new();
    let mut stack = find_tree_roots(root);
    stack.reverse();
    while let Some(r) = stack.pop() {
        if !is_operator(r.kind()) || !processed.insert(ptr_key(&r)) {
            continue;
        }
        if annotate_phi(&r) < MIN_PHI {
            continue;
        }
        raise_tree(&r, k, &mut stack);
    }
}
