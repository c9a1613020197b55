//! Reduced ordered multi-terminal decision diagrams.
//!
//! A [`Manager`] owns a node arena under one fixed [`VariableOrder`]. Nodes
//! built through [`Manager::mk_terminal`] and [`Manager::mk_node`] are
//! hash-consed, so every diagram assembled from them is already in reduced
//! ordered form. [`Manager::mk_raw_node`] and [`Manager::mk_raw_terminal`]
//! bypass the unique tables to model imported, unreduced trees; [`Manager::reduce`]
//! maps those back to canonical form.
//!
//! Nodes store variable identities, not levels. Changing the order (see
//! [`Manager::sift_reorder`]) produces a new manager whose diagrams evaluate
//! identically on the same assignment.

mod serial;
mod sift;

pub use serial::{decode, MAGIC, VERSION};
pub use sift::Sifted;

use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

/// Largest supported number of decision variables.
pub const MAX_VARS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("variable {var} (level {level}) is not above its children (levels {low_level}, {high_level})")]
    OrderViolation {
        var: u8,
        level: usize,
        low_level: usize,
        high_level: usize,
    },
    #[error("unknown variable {0}")]
    UnknownVariable(u8),
    #[error("invalid variable order: {0}")]
    InvalidOrder(String),
    #[error("set label must be non-empty")]
    EmptySet,
    #[error("malformed diagram file: {0}")]
    Format(String),
}

/// Value carried by a terminal node.
///
/// Singleton sets are normalized to [`TerminalLabel::Input`], so every label
/// has exactly one representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TerminalLabel {
    NoInput,
    Input(u32),
    /// Sorted, duplicate-free, at least two members.
    Set(Box<[u32]>),
}

impl TerminalLabel {
    /// Boolean `false` of a characteristic-function diagram.
    pub const FALSE: TerminalLabel = TerminalLabel::Input(0);
    /// Boolean `true` of a characteristic-function diagram.
    pub const TRUE: TerminalLabel = TerminalLabel::Input(1);

    pub fn set<I: IntoIterator<Item = u32>>(members: I) -> Result<Self, DiagramError> {
        let mut v: Vec<u32> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        match v.len() {
            0 => Err(DiagramError::EmptySet),
            1 => Ok(TerminalLabel::Input(v[0])),
            _ => Ok(TerminalLabel::Set(v.into_boxed_slice())),
        }
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }

    /// Members of the label; empty for `NoInput`.
    pub fn members(&self) -> &[u32] {
        match self {
            TerminalLabel::NoInput => &[],
            TerminalLabel::Input(k) => std::slice::from_ref(k),
            TerminalLabel::Set(s) => s,
        }
    }

    pub fn is_no_input(&self) -> bool {
        matches!(self, TerminalLabel::NoInput)
    }

    pub fn is_single(&self) -> bool {
        matches!(self, TerminalLabel::Input(_))
    }
}

impl fmt::Display for TerminalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalLabel::NoInput => f.write_str("nc"),
            _ => {
                f.write_str("{")?;
                for (i, m) in self.members().iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Permutation mapping level to variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VariableOrder {
    level_to_var: Vec<u8>,
    var_to_level: Vec<u8>,
}

impl VariableOrder {
    pub fn identity(var_count: usize) -> Self {
        assert!(var_count <= MAX_VARS, "at most {MAX_VARS} variables");
        let v: Vec<u8> = (0..var_count as u8).collect();
        VariableOrder {
            level_to_var: v.clone(),
            var_to_level: v,
        }
    }

    /// Builds an order from its level-to-variable list.
    pub fn from_levels(level_to_var: Vec<u8>) -> Result<Self, DiagramError> {
        let n = level_to_var.len();
        if n > MAX_VARS {
            return Err(DiagramError::InvalidOrder(format!(
                "{n} variables exceeds {MAX_VARS}"
            )));
        }
        let mut var_to_level = vec![u8::MAX; n];
        for (level, &var) in level_to_var.iter().enumerate() {
            let slot = var_to_level
                .get_mut(var as usize)
                .ok_or_else(|| DiagramError::InvalidOrder(format!("variable {var} out of range")))?;
            if *slot != u8::MAX {
                return Err(DiagramError::InvalidOrder(format!("variable {var} repeated")));
            }
            *slot = level as u8;
        }
        Ok(VariableOrder {
            level_to_var,
            var_to_level,
        })
    }

    pub fn len(&self) -> usize {
        self.level_to_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level_to_var.is_empty()
    }

    pub fn var_at(&self, level: usize) -> u8 {
        self.level_to_var[level]
    }

    pub fn level_of(&self, var: u8) -> usize {
        self.var_to_level[var as usize] as usize
    }

    pub fn levels(&self) -> &[u8] {
        &self.level_to_var
    }

    pub(crate) fn swap_levels(&mut self, level: usize) {
        self.level_to_var.swap(level, level + 1);
        let (a, b) = (self.level_to_var[level], self.level_to_var[level + 1]);
        self.var_to_level[a as usize] = level as u8;
        self.var_to_level[b as usize] = (level + 1) as u8;
    }
}

impl fmt::Display for VariableOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.level_to_var.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Opaque node reference, only meaningful inside the manager that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeHandle(u32);

impl NodeHandle {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Terminal(TerminalLabel),
    Decision {
        var: u8,
        low: NodeHandle,
        high: NodeHandle,
    },
}

/// Hash-consing node store for one variable order.
///
/// Single-threaded; handles must not be mixed between managers.
#[derive(Clone, Debug)]
pub struct Manager {
    order: VariableOrder,
    nodes: Vec<Node>,
    decisions: FxHashMap<(u8, NodeHandle, NodeHandle), NodeHandle>,
    terminals: FxHashMap<TerminalLabel, NodeHandle>,
}

impl Manager {
    pub fn new(order: VariableOrder) -> Self {
        Manager {
            order,
            nodes: Vec::new(),
            decisions: FxHashMap::default(),
            terminals: FxHashMap::default(),
        }
    }

    pub fn with_vars(var_count: usize) -> Self {
        Self::new(VariableOrder::identity(var_count))
    }

    pub fn order(&self) -> &VariableOrder {
        &self.order
    }

    pub fn var_count(&self) -> usize {
        self.order.len()
    }

    /// Number of nodes allocated in the arena, reachable or not.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, h: NodeHandle) -> &Node {
        &self.nodes[h.index()]
    }

    /// Level of a node; terminals sit below every variable.
    pub fn level(&self, h: NodeHandle) -> usize {
        match &self.nodes[h.index()] {
            Node::Terminal(_) => self.order.len(),
            Node::Decision { var, .. } => self.order.level_of(*var),
        }
    }

    pub fn label(&self, h: NodeHandle) -> Option<&TerminalLabel> {
        match &self.nodes[h.index()] {
            Node::Terminal(l) => Some(l),
            Node::Decision { .. } => None,
        }
    }

    pub fn is_terminal(&self, h: NodeHandle) -> bool {
        matches!(self.nodes[h.index()], Node::Terminal(_))
    }

    fn push(&mut self, node: Node) -> NodeHandle {
        let h = NodeHandle(u32::try_from(self.nodes.len()).expect("node arena overflow"));
        self.nodes.push(node);
        h
    }

    pub fn mk_terminal(&mut self, label: TerminalLabel) -> NodeHandle {
        if let Some(&h) = self.terminals.get(&label) {
            return h;
        }
        let h = self.push(Node::Terminal(label.clone()));
        self.terminals.insert(label, h);
        h
    }

    pub fn no_input(&mut self) -> NodeHandle {
        self.mk_terminal(TerminalLabel::NoInput)
    }

    fn check_order(&self, var: u8, low: NodeHandle, high: NodeHandle) -> Result<(), DiagramError> {
        if var as usize >= self.order.len() {
            return Err(DiagramError::UnknownVariable(var));
        }
        let level = self.order.level_of(var);
        let (ll, hl) = (self.level(low), self.level(high));
        if level >= ll || level >= hl {
            return Err(DiagramError::OrderViolation {
                var,
                level,
                low_level: ll,
                high_level: hl,
            });
        }
        Ok(())
    }

    /// Canonical decision node; returns `low` when both children coincide.
    pub fn mk_node(&mut self, var: u8, low: NodeHandle, high: NodeHandle) -> Result<NodeHandle, DiagramError> {
        self.check_order(var, low, high)?;
        Ok(self.mk_node_unchecked(var, low, high))
    }

    pub(crate) fn mk_node_unchecked(&mut self, var: u8, low: NodeHandle, high: NodeHandle) -> NodeHandle {
        debug_assert!(self.check_order(var, low, high).is_ok());
        if low == high {
            return low;
        }
        let key = (var, low, high);
        if let Some(&h) = self.decisions.get(&key) {
            return h;
        }
        let h = self.push(Node::Decision { var, low, high });
        self.decisions.insert(key, h);
        h
    }

    /// Fresh terminal outside the unique table (unreduced input).
    pub fn mk_raw_terminal(&mut self, label: TerminalLabel) -> NodeHandle {
        self.push(Node::Terminal(label))
    }

    /// Fresh decision node outside the unique table; equal children are kept.
    pub fn mk_raw_node(&mut self, var: u8, low: NodeHandle, high: NodeHandle) -> Result<NodeHandle, DiagramError> {
        self.check_order(var, low, high)?;
        Ok(self.push(Node::Decision { var, low, high }))
    }

    /// Reachable nodes, children before parents, low branch first.
    pub fn topological(&self, root: NodeHandle) -> Vec<NodeHandle> {
        let mut seen = FxHashSet::default();
        let mut out = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((h, expanded)) = stack.pop() {
            if expanded {
                out.push(h);
                continue;
            }
            if !seen.insert(h) {
                continue;
            }
            stack.push((h, true));
            if let Node::Decision { low, high, .. } = self.nodes[h.index()] {
                stack.push((high, false));
                stack.push((low, false));
            }
        }
        out
    }

    /// Distinct reachable nodes, terminals included.
    pub fn node_count(&self, root: NodeHandle) -> usize {
        self.topological(root).len()
    }

    /// Reachable decision nodes and terminals, separately.
    pub fn node_census(&self, root: NodeHandle) -> (usize, usize) {
        let topo = self.topological(root);
        let terms = topo.iter().filter(|&&h| self.is_terminal(h)).count();
        (topo.len() - terms, terms)
    }

    /// Canonical reduced form of the diagram rooted at `root`.
    pub fn reduce(&mut self, root: NodeHandle) -> NodeHandle {
        self.rebuild(root, |_, l| l.clone())
    }

    /// Rebuilds `root` canonically with every terminal label passed through `relabel`.
    pub fn rebuild<F>(&mut self, root: NodeHandle, mut relabel: F) -> NodeHandle
    where
        F: FnMut(NodeHandle, &TerminalLabel) -> TerminalLabel,
    {
        let mut memo: FxHashMap<NodeHandle, NodeHandle> = FxHashMap::default();
        for h in self.topological(root) {
            let new = match self.nodes[h.index()].clone() {
                Node::Terminal(l) => {
                    let l = relabel(h, &l);
                    self.mk_terminal(l)
                }
                Node::Decision { var, low, high } => {
                    let (lo, hi) = (memo[&low], memo[&high]);
                    self.mk_node_unchecked(var, lo, hi)
                }
            };
            memo.insert(h, new);
        }
        memo[&root]
    }

    /// Canonical diagram of the partial map `code -> label`, `default`
    /// everywhere else. Codes must be distinct.
    pub fn build_from_codes(&mut self, entries: &mut [(u64, TerminalLabel)], default: TerminalLabel) -> NodeHandle {
        let default = self.mk_terminal(default);
        self.build_level(0, entries, default)
    }

    fn build_level(&mut self, level: usize, entries: &mut [(u64, TerminalLabel)], default: NodeHandle) -> NodeHandle {
        if entries.is_empty() {
            return default;
        }
        if level == self.order.len() {
            debug_assert_eq!(entries.len(), 1, "duplicate codes");
            return self.mk_terminal(entries[0].1.clone());
        }
        let var = self.order.var_at(level);
        let split = itertools::partition(entries.iter_mut(), |e| e.0 >> var & 1 == 0);
        let (lo, hi) = entries.split_at_mut(split);
        let low = self.build_level(level + 1, lo, default);
        let high = self.build_level(level + 1, hi, default);
        self.mk_node_unchecked(var, low, high)
    }

    /// Follows low on 0 and high on 1; bit `v` of `bits` is variable `v`.
    pub fn eval(&self, root: NodeHandle, bits: u64) -> &TerminalLabel {
        let mut h = root;
        loop {
            match &self.nodes[h.index()] {
                Node::Terminal(l) => return l,
                Node::Decision { var, low, high } => {
                    h = if bits >> var & 1 == 1 { *high } else { *low };
                }
            }
        }
    }

    /// Same as [`Manager::eval`] with one `bool` per variable.
    pub fn eval_bits(&self, root: NodeHandle, bits: &[bool]) -> &TerminalLabel {
        let code = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        self.eval(root, code)
    }

    /// Visits every full assignment that does not lead to `NoInput`.
    ///
    /// Variables skipped along a path are expanded into both values, so the
    /// callback sees each assignment exactly once.
    pub fn for_each_assignment<F>(&self, root: NodeHandle, mut visit: F)
    where
        F: FnMut(u64, &TerminalLabel),
    {
        self.walk(root, 0, 0, &mut visit);
    }

    fn walk<F>(&self, h: NodeHandle, level: usize, code: u64, visit: &mut F)
    where
        F: FnMut(u64, &TerminalLabel),
    {
        if let Node::Terminal(TerminalLabel::NoInput) = self.nodes[h.index()] {
            return;
        }
        let node_level = self.level(h);
        if level < node_level {
            let bit = 1u64 << self.order.var_at(level);
            self.walk(h, level + 1, code, visit);
            self.walk(h, level + 1, code | bit, visit);
            return;
        }
        match &self.nodes[h.index()] {
            Node::Terminal(l) => visit(code, l),
            Node::Decision { var, low, high } => {
                let (low, high) = (*low, *high);
                let bit = 1u64 << var;
                self.walk(low, level + 1, code, visit);
                self.walk(high, level + 1, code | bit, visit);
            }
        }
    }

    /// Distinct terminal labels reachable from `root`.
    pub fn terminal_labels(&self, root: NodeHandle) -> Vec<TerminalLabel> {
        let mut v: Vec<TerminalLabel> = self
            .topological(root)
            .into_iter()
            .filter_map(|h| self.label(h).cloned())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Copies a diagram from another manager with the same variable order.
    pub fn import(&mut self, src: &Manager, root: NodeHandle) -> Result<NodeHandle, DiagramError> {
        if src.order != self.order {
            return Err(DiagramError::InvalidOrder(
                "import requires identical variable orders".into(),
            ));
        }
        let mut memo: FxHashMap<NodeHandle, NodeHandle> = FxHashMap::default();
        for h in src.topological(root) {
            let new = match src.node(h) {
                Node::Terminal(l) => self.mk_terminal(l.clone()),
                Node::Decision { var, low, high } => self.mk_node_unchecked(*var, memo[low], memo[high]),
            };
            memo.insert(h, new);
        }
        Ok(memo[&root])
    }

    /// Encodes the diagram in the `.mtb` format.
    pub fn serialize(&self, root: NodeHandle) -> Vec<u8> {
        serial::encode(self, root)
    }

    /// Byte length of the `.mtb` encoding; the practical size metric.
    pub fn serialized_len(&self, root: NodeHandle) -> usize {
        serial::encode(self, root).len()
    }
}
