//! Set cover as diagram determinization.
//!
//! [`encode_msc`] turns a cover instance into an MTBDD whose optimal
//! determinization has `3N - 1 + |I|` nodes for an optimal cover `I` of an
//! `N`-element universe. [`brute_force_od`] finds that optimum by trying
//! every determinization, and [`decode_cover`] reads the cover back from the
//! low terminals. Together they cross-check the set-cover oracle at toy
//! scale.

use std::collections::{BTreeSet, VecDeque};

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::mtbdd::{Manager, Node, NodeHandle, TerminalLabel};
use crate::setcover::{CoverError, CoverInstance, CoverSolution};

/// Largest number of determinizations [`brute_force_od`] will enumerate.
pub const OD_ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OdError {
    #[error("{0} determinizations exceed the enumeration limit of {OD_ENUMERATION_LIMIT}")]
    SizeLimit(u64),
    #[error("not a determinized cover encoding: {0}")]
    Format(String),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// Path to one expandable leaf of the encoding tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafPath {
    pub element: u64,
    /// Assignment reaching the leaf's low terminal.
    pub code: u64,
}

#[derive(Clone, Debug)]
pub struct MscEncoding {
    pub manager: Manager,
    pub root: NodeHandle,
    /// Universe size `N`.
    pub n: usize,
    /// Family size `K`.
    pub k: usize,
    /// Expandable leaves in queue order, the `i`-th holding element `x_i`.
    pub leaves: Vec<LeafPath>,
}

struct Shape {
    depth: usize,
    children: Option<(usize, usize)>,
}

/// Builds the unreduced encoding tree.
///
/// A queue-grown near-balanced binary tree gets `N` expandable leaves; leaf
/// `i` receives a low terminal labeled with the (1-based) ids of the sets
/// containing `x_i`, and a high terminal labeled `K + i`. Decision variables
/// are tree depths. All `4N - 1` nodes are distinct arena entries.
pub fn encode_msc(inst: &CoverInstance) -> Result<MscEncoding, OdError> {
    let n = inst.universe().len();
    let k = inst.sets().len();
    if n == 0 {
        return Err(OdError::Format("universe is empty".into()));
    }
    let ids: Vec<Vec<u32>> = inst
        .universe()
        .iter()
        .map(|x| {
            inst.sets()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.binary_search(x).is_ok())
                .map(|(j, _)| j as u32 + 1)
                .collect::<Vec<_>>()
        })
        .collect();
    if let Some(i) = ids.iter().position(Vec::is_empty) {
        return Err(CoverError::Infeasible(inst.universe()[i]).into());
    }

    let mut shape = vec![Shape { depth: 0, children: None }];
    let mut queue = VecDeque::from([0usize]);
    let mut count = 1;
    while count != n {
        let t = queue.pop_front().expect("queue holds count >= 1 leaves");
        let depth = shape[t].depth + 1;
        let (lo, hi) = (shape.len(), shape.len() + 1);
        shape.push(Shape { depth, children: None });
        shape.push(Shape { depth, children: None });
        shape[t].children = Some((lo, hi));
        queue.push_back(lo);
        queue.push_back(hi);
        count += 1;
    }
    let leaf_order: Vec<usize> = queue.into_iter().collect();
    let vars = shape.iter().map(|s| s.depth).max().unwrap_or(0) + 1;
    let mut manager = Manager::with_vars(vars);

    let mut element_of = vec![usize::MAX; shape.len()];
    for (i, &t) in leaf_order.iter().enumerate() {
        element_of[t] = i;
    }
    let mut codes = vec![0u64; shape.len()];
    for t in 0..shape.len() {
        if let Some((lo, hi)) = shape[t].children {
            codes[lo] = codes[t];
            codes[hi] = codes[t] | 1 << shape[t].depth;
        }
    }

    fn build(
        t: usize,
        shape: &[Shape],
        element_of: &[usize],
        ids: &[Vec<u32>],
        k: usize,
        m: &mut Manager,
    ) -> NodeHandle {
        let var = shape[t].depth as u8;
        let (low, high) = match shape[t].children {
            Some((lo, hi)) => (
                build(lo, shape, element_of, ids, k, m),
                build(hi, shape, element_of, ids, k, m),
            ),
            None => {
                let i = element_of[t];
                let low = TerminalLabel::set(ids[i].iter().copied()).expect("non-empty");
                (
                    m.mk_raw_terminal(low),
                    m.mk_raw_terminal(TerminalLabel::Input((k + i + 1) as u32)),
                )
            }
        };
        m.mk_raw_node(var, low, high).expect("depth-ordered tree")
    }
    let root = build(0, &shape, &element_of, &ids, k, &mut manager);

    let leaves = leaf_order
        .iter()
        .enumerate()
        .map(|(i, &t)| LeafPath {
            element: inst.universe()[i],
            code: codes[t],
        })
        .collect();
    Ok(MscEncoding {
        manager,
        root,
        n,
        k,
        leaves,
    })
}

/// Minimum-size determinization by exhaustive enumeration.
///
/// Every terminal node carrying a set label gets one member; terminals are
/// ordered children-first, low branch first, and choices within a terminal
/// ascend. The first minimum in that lexicographic order wins. The winner is
/// built canonically in `m` and returned with its node count.
pub fn brute_force_od(m: &mut Manager, root: NodeHandle) -> Result<(NodeHandle, usize), OdError> {
    let topo = m.topological(root);
    let pos: FxHashMap<NodeHandle, usize> = topo.iter().enumerate().map(|(i, &h)| (h, i)).collect();

    // Label ids: every label a terminal may end up with.
    let mut label_id: FxHashMap<TerminalLabel, u32> = FxHashMap::default();
    let mut intern = |l: TerminalLabel| -> u32 {
        let next = label_id.len() as u32;
        *label_id.entry(l).or_insert(next)
    };
    enum Slot {
        Fixed(u32),
        Choice(usize),
        Decision(u8, usize, usize),
    }
    let mut choices: Vec<(Vec<u32>, Vec<u32>)> = Vec::new(); // (members, label ids)
    let mut slots = Vec::with_capacity(topo.len());
    for &h in &topo {
        slots.push(match m.node(h) {
            Node::Terminal(TerminalLabel::Set(s)) => {
                let ids = s.iter().map(|&u| intern(TerminalLabel::Input(u))).collect();
                choices.push((s.to_vec(), ids));
                Slot::Choice(choices.len() - 1)
            }
            Node::Terminal(l) => Slot::Fixed(intern(l.clone())),
            Node::Decision { var, low, high } => Slot::Decision(*var, pos[low], pos[high]),
        });
    }
    let total = choices
        .iter()
        .try_fold(1u64, |acc, (c, _)| acc.checked_mul(c.len() as u64))
        .filter(|&p| p <= OD_ENUMERATION_LIMIT)
        .ok_or_else(|| {
            OdError::SizeLimit(
                choices
                    .iter()
                    .fold(1u64, |acc, (c, _)| acc.saturating_mul(c.len() as u64)),
            )
        })?;
    let label_count = label_id.len() as u32;

    // Reduced size of one determinization, by canonical ids.
    let size_of = |index: u64, ids: &mut Vec<u32>, table: &mut FxHashMap<(u8, u32, u32), u32>, used: &mut Vec<bool>| {
        let mut pick = vec![0usize; choices.len()];
        let mut rest = index;
        for (c, p) in choices.iter().zip(pick.iter_mut()).rev() {
            let r = c.0.len() as u64;
            *p = (rest % r) as usize;
            rest /= r;
        }
        table.clear();
        used.iter_mut().for_each(|u| *u = false);
        let mut terminals = 0;
        for (i, slot) in slots.iter().enumerate() {
            let id = match *slot {
                Slot::Fixed(l) => l,
                Slot::Choice(c) => choices[c].1[pick[c]],
                Slot::Decision(var, lo, hi) => {
                    let (a, b) = (ids[lo], ids[hi]);
                    if a == b {
                        a
                    } else {
                        let next = label_count + table.len() as u32;
                        *table.entry((var, a, b)).or_insert(next)
                    }
                }
            };
            if id < label_count && !used[id as usize] {
                used[id as usize] = true;
                terminals += 1;
            }
            ids[i] = id;
        }
        terminals + table.len()
    };

    const CHUNK: u64 = 4096;
    let chunks = total.div_ceil(CHUNK);
    let (best_size, best_index) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut ids = vec![0u32; slots.len()];
            let mut table = FxHashMap::default();
            let mut used = vec![false; label_count as usize];
            let mut best = (usize::MAX, u64::MAX);
            for index in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let s = size_of(index, &mut ids, &mut table, &mut used);
                if s < best.0 {
                    best = (s, index);
                }
            }
            best
        })
        .min()
        .expect("at least one determinization");

    let mut pick = vec![0usize; choices.len()];
    let mut rest = best_index;
    for (c, p) in choices.iter().zip(pick.iter_mut()).rev() {
        let r = c.0.len() as u64;
        *p = (rest % r) as usize;
        rest /= r;
    }
    let mut slot_choice: FxHashMap<NodeHandle, u32> = FxHashMap::default();
    for (&h, slot) in topo.iter().zip(&slots) {
        if let Slot::Choice(c) = slot {
            slot_choice.insert(h, choices[*c].0[pick[*c]]);
        }
    }
    let det = m.rebuild(root, |h, l| match slot_choice.get(&h) {
        Some(&u) => TerminalLabel::Input(u),
        None => l.clone(),
    });
    debug_assert_eq!(m.node_count(det), best_size);
    Ok((det, best_size))
}

/// Reads the chosen sets off the low terminals of a determinized encoding.
pub fn decode_cover(m: &Manager, det_root: NodeHandle, enc: &MscEncoding, inst: &CoverInstance) -> Result<CoverSolution, OdError> {
    let mut chosen = BTreeSet::new();
    for leaf in &enc.leaves {
        let j = match m.eval(det_root, leaf.code) {
            TerminalLabel::Input(j) if (1..=enc.k as u32).contains(j) => (*j - 1) as usize,
            other => {
                return Err(OdError::Format(format!(
                    "low terminal of element {} is {other}",
                    leaf.element
                )))
            }
        };
        if inst.sets()[j].binary_search(&leaf.element).is_err() {
            return Err(OdError::Format(format!(
                "element {} is not in chosen set {}",
                leaf.element,
                j + 1
            )));
        }
        chosen.insert(j);
    }
    Ok(CoverSolution {
        sets: chosen.into_iter().collect(),
    })
}
