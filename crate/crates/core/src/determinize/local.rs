//! Top-down collapse of subtrees that share a common input.

use rustc_hash::FxHashMap;

use crate::mtbdd::{Manager, Node, NodeHandle, TerminalLabel};

/// Inputs admitted by every domain leaf below a node.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Common {
    /// No domain leaf below: only `NoInput` terminals.
    Any,
    /// Sorted intersection; empty when the leaves disagree.
    Inputs(Vec<u32>),
}

fn intersect(a: &Common, b: &Common) -> Common {
    match (a, b) {
        (Common::Any, x) | (x, Common::Any) => x.clone(),
        (Common::Inputs(x), Common::Inputs(y)) => {
            let (mut i, mut j) = (0, 0);
            let mut out = Vec::new();
            while i < x.len() && j < y.len() {
                match x[i].cmp(&y[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        out.push(x[i]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            Common::Inputs(out)
        }
    }
}

struct Collapse<'a, F> {
    m: &'a mut Manager,
    common: FxHashMap<NodeHandle, Common>,
    det: FxHashMap<NodeHandle, NodeHandle>,
    relabeled: FxHashMap<(NodeHandle, u32), NodeHandle>,
    choose: F,
    permissive: bool,
}

impl<F: Fn(&[u32]) -> u32> Collapse<'_, F> {
    fn det(&mut self, n: NodeHandle) -> NodeHandle {
        if let Some(&r) = self.det.get(&n) {
            return r;
        }
        let r = match &self.common[&n] {
            Common::Any => n,
            Common::Inputs(s) if !s.is_empty() => {
                let v = (self.choose)(s);
                self.relabel(n, v)
            }
            Common::Inputs(_) => {
                let Node::Decision { var, low, high } = *self.m.node(n) else {
                    unreachable!("terminals always have a non-empty common set")
                };
                let lo = self.det(low);
                let hi = self.det(high);
                self.m.mk_node_unchecked(var, lo, hi)
            }
        };
        self.det.insert(n, r);
        r
    }

    fn relabel(&mut self, n: NodeHandle, v: u32) -> NodeHandle {
        if let Some(&r) = self.relabeled.get(&(n, v)) {
            return r;
        }
        let r = match self.m.node(n).clone() {
            Node::Terminal(TerminalLabel::NoInput) if !self.permissive => n,
            Node::Terminal(_) => self.m.mk_terminal(TerminalLabel::Input(v)),
            Node::Decision { var, low, high } => {
                let lo = self.relabel(low, v);
                let hi = self.relabel(high, v);
                self.m.mk_node_unchecked(var, lo, hi)
            }
        };
        self.relabeled.insert((n, v), r);
        r
    }
}

/// Collapses the highest subtrees whose domain leaves share an input to that
/// input, chosen by `choose` among the common ones; leaves not covered by
/// any such subtree resolve their own set with `choose`.
///
/// `NoInput` leaves stay `NoInput` unless `permissive`, in which case they
/// accept any input and are absorbed by the collapse.
pub(crate) fn collapse<F>(m: &mut Manager, root: NodeHandle, choose: F, permissive: bool) -> NodeHandle
where
    F: Fn(&[u32]) -> u32,
{
    let mut common: FxHashMap<NodeHandle, Common> = FxHashMap::default();
    for h in m.topological(root) {
        let c = match m.node(h) {
            Node::Terminal(TerminalLabel::NoInput) => Common::Any,
            Node::Terminal(l) => Common::Inputs(l.members().to_vec()),
            Node::Decision { low, high, .. } => intersect(&common[low], &common[high]),
        };
        common.insert(h, c);
    }
    let mut pass = Collapse {
        m,
        common,
        det: FxHashMap::default(),
        relabeled: FxHashMap::default(),
        choose,
        permissive,
    };
    pass.det(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intersections() {
        let a = Common::Inputs(vec![1, 3, 5]);
        let b = Common::Inputs(vec![2, 3, 5, 7]);
        assert_eq!(intersect(&a, &b), Common::Inputs(vec![3, 5]));
        assert_eq!(intersect(&Common::Any, &b), b);
        assert_eq!(intersect(&Common::Any, &Common::Any), Common::Any);
    }

    #[test]
    fn permissive_absorbs_no_input() {
        let mut m = Manager::with_vars(1);
        let nc = m.no_input();
        let s = m.mk_terminal(TerminalLabel::set([2, 4]).unwrap());
        let root = m.mk_node(0, nc, s).unwrap();
        let strict = collapse(&mut m, root, |s| s[0], false);
        assert_eq!(m.node_count(strict), 3);
        assert_eq!(m.eval(strict, 0), &TerminalLabel::NoInput);
        assert_eq!(m.eval(strict, 1), &TerminalLabel::Input(2));
        let loose = collapse(&mut m, root, |s| s[0], true);
        assert_eq!(m.label(loose), Some(&TerminalLabel::Input(2)));
    }
}
