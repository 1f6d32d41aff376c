//! Multithreaded execution of evaluation plans.
//!
//! A plan is a fixed dependency graph of node computations. Workers pull
//! ready tasks from a shared FIFO queue; finishing a task releases its
//! dependents. Values are bit-identical to serial execution because each
//! node's computation depends only on its children's finished values and
//! its own fixed target, never on scheduling order.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering as AtomicOrd};

use parking_lot::{Condvar, Mutex};

use crate::eval::{compute_node, ExecPlan};

pub(crate) fn run_plan(plan: &ExecPlan, workers: usize) {
    let n = plan.nodes.len();
    if n == 0 {
        return;
    }
    let pending: Vec<AtomicU32> = plan
        .dep_children
        .iter()
        .map(|d| AtomicU32::new(d.len() as u32))
        .collect();
    let ready: Mutex<VecDeque<u32>> = Mutex::new(
        plan.dep_children
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_empty())
            .map(|(i, _)| i as u32)
            .collect(),
    );
    let cv = Condvar::new();
    let remaining = AtomicUsize::new(n);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let task = {
                    let mut q = ready.lock();
                    loop {
                        if remaining.load(AtomicOrd::Acquire) == 0 {
                            return;
                        }
                        match q.pop_front() {
                            Some(t) => break t,
                            None => cv.wait(&mut q),
                        }
                    }
                };
                let i = task as usize;
                compute_node(&plan.nodes[i], plan.targets[i]);
                let mut released = Vec::new();
                for &d in &plan.dependents[i] {
                    if pending[d as usize].fetch_sub(1, AtomicOrd::AcqRel) == 1 {
                        released.push(d);
                    }
                }
                let all_done = remaining.fetch_sub(1, AtomicOrd::AcqRel) == 1;
                if !released.is_empty() || all_done {
                    let mut q = ready.lock();
                    q.extend(released);
                    drop(q);
                    cv.notify_all();
                }
            });
        }
    });
}
