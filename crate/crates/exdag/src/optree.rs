//! Partition of a DAG into operator trees: maximal connected subgraphs of
//! arithmetic nodes in which every interior node has exactly one parent.
//!
//! Only a tree's root may be shared; any arithmetic node with two or more
//! incoming edges starts a tree of its own, and root extractions are always
//! boundaries. Each tree node carries an operand count `phi`: the number of
//! edges leaving the tree, counted with multiplicity.

use std::collections::HashSet;
use std::sync::atomic::Ordering as AtomicOrd;
use std::sync::Arc;

use crate::node::{ptr_key, Node, NodeKind};

/// Arithmetic kinds that can belong to an operator tree.
pub(crate) fn is_operator(kind: NodeKind) -> bool {
    matches!(
        kind,
        NodeKind::Add | NodeKind::Sub | NodeKind::Mul | NodeKind::Div | NodeKind::Neg
    )
}

/// True when `child` is interior to its parent's tree: an arithmetic node
/// whose only incoming edge is the one just followed.
pub(crate) fn is_member_child(child: &Arc<Node>) -> bool {
    is_operator(child.kind()) && child.parent_count.load(AtomicOrd::Relaxed) == 1
}

/// Roots of all operator trees reachable from `root`, in deterministic
/// discovery order. Interior nodes are never reported; shared operands are
/// reported once.
pub(crate) fn find_tree_roots(root: &Arc<Node>) -> Vec<Arc<Node>> {
    let mut roots = Vec::new();
    let mut seen: HashSet<usize> = HashSet::new();
    let mut cand = vec![root.clone()];
    seen.insert(ptr_key(root));
    while let Some(n) = cand.pop() {
        if is_operator(n.kind()) {
            roots.push(n.clone());
            // Walk the tree; every boundary edge yields a candidate.
            let mut stack = vec![n];
            while let Some(m) = stack.pop() {
                for c in m.children() {
                    if is_member_child(&c) {
                        stack.push(c);
                    } else if seen.insert(ptr_key(&c)) {
                        cand.push(c);
                    }
                }
            }
        } else {
            for c in n.children() {
                if seen.insert(ptr_key(&c)) {
                    cand.push(c);
                }
            }
        }
    }
    roots
}

/// Computes and stores `phi` for every member of the tree rooted at `root`,
/// returning the root's operand count. Operand edges count 1 each.
pub(crate) fn annotate_phi(root: &Arc<Node>) -> u64 {
    // (node, its children, next child index, operands seen so far)
    let mut stack: Vec<(Arc<Node>, Vec<Arc<Node>>, usize, u64)> = Vec::new();
    let kids = root.children();
    stack.push((root.clone(), kids, 0, 0));
    loop {
        let (_, children, idx, acc) = stack.last_mut().unwrap();
        if *idx < children.len() {
            let c = children[*idx].clone();
            *idx += 1;
            if is_member_child(&c) {
                let kids = c.children();
                stack.push((c, kids, 0, 0));
            } else {
                *acc += 1;
            }
        } else {
            let (node, _, _, phi) = stack.pop().unwrap();
            node.state.lock().phi = Some(phi);
            match stack.last_mut() {
                Some((_, _, _, pacc)) => *pacc += phi,
                None => return phi,
            }
        }
    }
}

/// Operand nodes of the tree rooted at `root`, left to right and with
/// multiplicity.
#[cfg(test)]
pub(crate) fn operands_in_order(root: &Arc<Node>) -> Vec<Arc<Node>> {
    let mut out = Vec::new();
    let mut stack = vec![root.clone()];
    // Stack holds pending subtrees; children pushed right-first keeps the
    // visit order left to right.
    while let Some(n) = stack.pop() {
        if Arc::ptr_eq(&n, root) || is_member_child(&n) {
            let mut kids = n.children();
            kids.reverse();
            stack.extend(kids);
        } else {
            out.push(n);
        }
    }
    out
}
