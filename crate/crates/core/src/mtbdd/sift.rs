//! Variable reordering by adjacent-level swaps and Rudell-style sifting.
//!
//! Every swap rebuilds the reachable diagram into a fresh manager, so the
//! working manager only ever holds live nodes and `node_count` equals the
//! arena size.

use rustc_hash::FxHashMap;

use super::{Manager, Node, NodeHandle, VariableOrder};

/// A diagram rebuilt under a new variable order.
#[derive(Clone, Debug)]
pub struct Sifted {
    pub manager: Manager,
    pub root: NodeHandle,
    pub order: VariableOrder,
}

impl Sifted {
    pub fn node_count(&self) -> usize {
        self.manager.node_count(self.root)
    }
}

/// Copies `root` from `src` into a fresh manager whose order has `level` and
/// `level + 1` exchanged.
fn swap_adjacent(src: &Manager, root: NodeHandle, level: usize) -> (Manager, NodeHandle) {
    let mut order = src.order().clone();
    order.swap_levels(level);
    let mut dst = Manager::new(order);
    let upper = src.order().var_at(level);
    let lower = src.order().var_at(level + 1);

    let mut memo: FxHashMap<NodeHandle, NodeHandle> = FxHashMap::default();
    // Cofactors of a child with respect to `lower`.
    let split = |h: NodeHandle| -> (NodeHandle, NodeHandle) {
        match src.node(h) {
            Node::Decision { var, low, high } if *var == lower => (*low, *high),
            _ => (h, h),
        }
    };
    for h in src.topological(root) {
        let new = match src.node(h) {
            Node::Terminal(l) => dst.mk_terminal(l.clone()),
            Node::Decision { var, low, high } if *var == upper => {
                let (f00, f01) = split(*low);
                let (f10, f11) = split(*high);
                // f00..f11 are all below both swapped levels, so already copied
                // unless they were only reachable through a `lower` node, which
                // the topological walk also visited first.
                let lo = dst.mk_node_unchecked(upper, memo[&f00], memo[&f10]);
                let hi = dst.mk_node_unchecked(upper, memo[&f01], memo[&f11]);
                dst.mk_node_unchecked(lower, lo, hi)
            }
            Node::Decision { var, low, high } => dst.mk_node_unchecked(*var, memo[low], memo[high]),
        };
        memo.insert(h, new);
    }
    let r = memo[&root];
    // Drop the orphaned copies of `lower` nodes that only fed swapped parents.
    compact(dst, r)
}

/// Keeps only the nodes reachable from `root`.
fn compact(m: Manager, root: NodeHandle) -> (Manager, NodeHandle) {
    if m.node_count(root) == m.arena_len() {
        return (m, root);
    }
    let mut fresh = Manager::new(m.order().clone());
    let r = fresh.import(&m, root).expect("same order");
    (fresh, r)
}

fn live_per_level(m: &Manager, root: NodeHandle) -> Vec<usize> {
    let mut counts = vec![0; m.var_count()];
    for h in m.topological(root) {
        if let Node::Decision { var, .. } = m.node(h) {
            counts[m.order().level_of(*var)] += 1;
        }
    }
    counts
}

impl Manager {
    /// Rebuilds `root` under `order` in a fresh manager.
    pub fn reorder_to(&self, root: NodeHandle, order: &VariableOrder) -> Sifted {
        assert_eq!(order.len(), self.var_count(), "order length mismatch");
        let (mut m, mut r) = compact(self.clone(), root);
        // Bubble the target order into place, top level first.
        for target_level in 0..order.len() {
            let var = order.var_at(target_level);
            let mut at = m.order().level_of(var);
            while at > target_level {
                (m, r) = swap_adjacent(&m, r, at - 1);
                at -= 1;
            }
        }
        let order = m.order().clone();
        Sifted { manager: m, root: r, order }
    }

    /// Sifting to convergence.
    ///
    /// Variables are processed in decreasing order of live nodes at their
    /// level (ties by level). Each one visits every position, first downward
    /// then upward, and settles where the diagram was smallest; among equal
    /// sizes the position seen first wins, so the starting position is kept
    /// unless something strictly better exists. Passes repeat until a full
    /// pass brings no improvement.
    pub fn sift_reorder(&self, root: NodeHandle) -> Sifted {
        let (mut m, mut r) = compact(self.clone(), root);
        let n = m.var_count();
        if n < 2 {
            let order = m.order().clone();
            return Sifted { manager: m, root: r, order };
        }
        let mut size = m.node_count(r);
        loop {
            let start_size = size;
            let counts = live_per_level(&m, r);
            let mut vars: Vec<(usize, u8)> = (0..n).map(|l| (counts[l], m.order().var_at(l))).collect();
            // Stable: equal counts keep level order.
            vars.sort_by_key(|v| std::cmp::Reverse(v.0));
            for (_, var) in vars {
                let start = m.order().level_of(var);
                let mut best = (size, start);
                let mut at = start;
                while at + 1 < n {
                    (m, r) = swap_adjacent(&m, r, at);
                    at += 1;
                    let s = m.node_count(r);
                    if s < best.0 {
                        best = (s, at);
                    }
                }
                while at > 0 {
                    (m, r) = swap_adjacent(&m, r, at - 1);
                    at -= 1;
                    let s = m.node_count(r);
                    if s < best.0 {
                        best = (s, at);
                    }
                }
                while at < best.1 {
                    (m, r) = swap_adjacent(&m, r, at);
                    at += 1;
                }
                size = m.node_count(r);
                debug_assert_eq!(size, best.0);
            }
            if size >= start_size {
                break;
            }
        }
        let order = m.order().clone();
        Sifted { manager: m, root: r, order }
    }
}
