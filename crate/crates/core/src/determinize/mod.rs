//! Size-driven determinization of set-valued controllers.
//!
//! * [`la`] collapses the highest state-space subtrees that share an input
//!   (lowest input index wins among several).
//! * [`ga`] picks inputs globally via greedy set cover and keeps, per state,
//!   the earliest-chosen input it admits.
//! * [`lga`] runs the local collapse but breaks ties by the greedy cover's
//!   priority.
//! * [`blga`] sifts the controller diagram first and runs [`lga`] in the
//!   reordered bit space.
//!
//! Every result keeps the controller domain: states without inputs stay
//! `NoInput` unless the permissive variant is requested.

mod local;
mod validate;

pub use validate::{validate, validate_diagram, Violation};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::controller::{Grid, ModelError, SymbolicController};
use crate::mtbdd::{Manager, NodeHandle, TerminalLabel};
use crate::setcover::{greedy_cover, CoverError, CoverInstance};

#[derive(Debug, Error)]
pub enum DeterminizeError {
    #[error("controller has no state with an admissible input")]
    EmptyController,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    La,
    Ga,
    Lga,
    Blga,
    Sr,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::La, Algorithm::Ga, Algorithm::Lga, Algorithm::Blga, Algorithm::Sr];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::La => "la",
            Algorithm::Ga => "ga",
            Algorithm::Lga => "lga",
            Algorithm::Blga => "blga",
            Algorithm::Sr => "sr",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected la, ga, lga, blga or sr)"))
    }
}

/// Inputs ranked by preference, best first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputPriority {
    order: Vec<u32>,
    rank: FxHashMap<u32, usize>,
}

impl InputPriority {
    /// `preferred` in the given order, then any other input of `ctrl`
    /// ascending.
    pub fn new(preferred: Vec<u32>, ctrl: &SymbolicController) -> Self {
        let mut order = Vec::new();
        let mut rank = FxHashMap::default();
        let rest: std::collections::BTreeSet<u32> = ctrl.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        for u in preferred.into_iter().chain(rest) {
            if let std::collections::hash_map::Entry::Vacant(e) = rank.entry(u) {
                e.insert(order.len());
                order.push(u);
            }
        }
        InputPriority { order, rank }
    }

    /// Greedy-cover priority: inputs in the order the cover picked them.
    pub fn from_cover(ctrl: &SymbolicController) -> Result<(Self, usize), DeterminizeError> {
        let cover = input_cover(ctrl)?;
        let n = cover.len();
        Ok((Self::new(cover, ctrl), n))
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn rank(&self, input: u32) -> usize {
        self.rank.get(&input).copied().unwrap_or(usize::MAX)
    }

    /// Best-ranked member; unranked inputs lose to ranked ones, then the
    /// lowest index wins.
    pub fn best(&self, inputs: &[u32]) -> u32 {
        *inputs
            .iter()
            .min_by_key(|&&u| (self.rank(u), u))
            .expect("non-empty input set")
    }
}

/// Inputs chosen by unit-weight greedy cover of the domain, in selection
/// order. Set `j` of the cover instance holds the states admitting input `j`.
pub fn input_cover(ctrl: &SymbolicController) -> Result<Vec<u32>, DeterminizeError> {
    let mut by_input: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for (s, inputs) in ctrl.iter() {
        for &u in inputs {
            by_input.entry(u).or_default().push(s);
        }
    }
    let inputs: Vec<u32> = by_input.keys().copied().collect();
    let inst = CoverInstance::new(ctrl.domain(), by_input.into_values());
    let sol = greedy_cover(&inst)?;
    Ok(sol.sets.into_iter().map(|j| inputs[j]).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Let no-input cells take any input during the local collapse.
    pub permissive: bool,
}

#[derive(Clone, Debug)]
pub struct DeterminizationResult {
    pub algorithm: Algorithm,
    /// Holds only the result diagram; its order is the order of the result.
    pub manager: Manager,
    pub root: NodeHandle,
    /// State index to chosen input, decoded from the result diagram.
    pub chosen: BTreeMap<u64, u32>,
    pub permissive: bool,
    pub priority: Option<InputPriority>,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub bytes_before: usize,
    pub bytes_after: usize,
}

impl DeterminizationResult {
    pub(crate) fn assemble(
        algorithm: Algorithm,
        work: &Manager,
        before: NodeHandle,
        after: NodeHandle,
        state: &Grid,
        permissive: bool,
        priority: Option<InputPriority>,
    ) -> Self {
        let mut manager = Manager::new(work.order().clone());
        let root = manager.import(work, after).expect("same order");
        let chosen = decode_chosen(&manager, root, state);
        DeterminizationResult {
            algorithm,
            nodes_before: work.node_count(before),
            bytes_before: work.serialized_len(before),
            nodes_after: manager.node_count(root),
            bytes_after: manager.serialized_len(root),
            manager,
            root,
            chosen,
            permissive,
            priority,
        }
    }

    pub fn serialize(&self) -> Vec<u8> {
        self.manager.serialize(self.root)
    }
}

fn decode_chosen(m: &Manager, root: NodeHandle, state: &Grid) -> BTreeMap<u64, u32> {
    let mut chosen = BTreeMap::new();
    m.for_each_assignment(root, |code, label| {
        if let (Ok(cell), TerminalLabel::Input(v)) = (state.unindex_fb(code), label) {
            chosen.insert(state.index_fs(&cell).expect("valid cell"), *v);
        }
    });
    chosen
}

fn nondeterministic(ctrl: &SymbolicController) -> Result<(Manager, NodeHandle), DeterminizeError> {
    if ctrl.is_empty() {
        return Err(DeterminizeError::EmptyController);
    }
    let mut m = ctrl.state_manager();
    let root = ctrl.encode_mtbdd(&mut m)?;
    Ok((m, root))
}

pub fn la(ctrl: &SymbolicController) -> Result<DeterminizationResult, DeterminizeError> {
    la_with(ctrl, Options::default())
}

pub fn la_with(ctrl: &SymbolicController, opts: Options) -> Result<DeterminizationResult, DeterminizeError> {
    let (mut m, root) = nondeterministic(ctrl)?;
    let det = local::collapse(&mut m, root, |s| s[0], opts.permissive);
    Ok(DeterminizationResult::assemble(
        Algorithm::La,
        &m,
        root,
        det,
        ctrl.state_grid(),
        opts.permissive,
        None,
    ))
}

pub fn ga(ctrl: &SymbolicController) -> Result<DeterminizationResult, DeterminizeError> {
    let (mut m, root) = nondeterministic(ctrl)?;
    let (priority, chosen_inputs) = InputPriority::from_cover(ctrl)?;
    debug_assert!(chosen_inputs >= 1);
    let det = m.rebuild(root, |_, l| match l {
        TerminalLabel::NoInput => TerminalLabel::NoInput,
        l => TerminalLabel::Input(priority.best(l.members())),
    });
    Ok(DeterminizationResult::assemble(
        Algorithm::Ga,
        &m,
        root,
        det,
        ctrl.state_grid(),
        false,
        Some(priority),
    ))
}

pub fn lga(ctrl: &SymbolicController) -> Result<DeterminizationResult, DeterminizeError> {
    lga_with(ctrl, Options::default())
}

pub fn lga_with(ctrl: &SymbolicController, opts: Options) -> Result<DeterminizationResult, DeterminizeError> {
    let (priority, _) = InputPriority::from_cover(ctrl)?;
    lga_with_priority(ctrl, priority, opts)
}

/// LGA with a caller-supplied priority.
pub fn lga_with_priority(
    ctrl: &SymbolicController,
    priority: InputPriority,
    opts: Options,
) -> Result<DeterminizationResult, DeterminizeError> {
    let (mut m, root) = nondeterministic(ctrl)?;
    let det = local::collapse(&mut m, root, |s| priority.best(s), opts.permissive);
    Ok(DeterminizationResult::assemble(
        Algorithm::Lga,
        &m,
        root,
        det,
        ctrl.state_grid(),
        opts.permissive,
        Some(priority),
    ))
}

pub fn blga(ctrl: &SymbolicController) -> Result<DeterminizationResult, DeterminizeError> {
    blga_with(ctrl, Options::default())
}

pub fn blga_with(ctrl: &SymbolicController, opts: Options) -> Result<DeterminizationResult, DeterminizeError> {
    let (m, root) = nondeterministic(ctrl)?;
    let (priority, _) = InputPriority::from_cover(ctrl)?;
    let sifted = m.sift_reorder(root);
    let mut work = sifted.manager;
    let det = local::collapse(&mut work, sifted.root, |s| priority.best(s), opts.permissive);
    Ok(DeterminizationResult::assemble(
        Algorithm::Blga,
        &work,
        sifted.root,
        det,
        ctrl.state_grid(),
        opts.permissive,
        Some(priority),
    ))
}

/// Runs one of the diagram-based algorithms.
///
/// [`Algorithm::Sr`] needs a configuration and seed; use
/// [`crate::symreg::evolve`] for it.
pub fn run(
    algorithm: Algorithm,
    ctrl: &SymbolicController,
    opts: Options,
) -> Result<DeterminizationResult, DeterminizeError> {
    match algorithm {
        Algorithm::La => la_with(ctrl, opts),
        Algorithm::Ga => ga(ctrl),
        Algorithm::Lga => lga_with(ctrl, opts),
        Algorithm::Blga => blga_with(ctrl, opts),
        Algorithm::Sr => panic!("symbolic regression is run through symreg::evolve"),
    }
}

/// Encodes a deterministic state-to-input map as a reduced MTBDD result.
pub(crate) fn from_choice_map(
    algorithm: Algorithm,
    ctrl: &SymbolicController,
    chosen: &BTreeMap<u64, u32>,
    priority: Option<InputPriority>,
) -> Result<DeterminizationResult, DeterminizeError> {
    let (mut m, before) = nondeterministic(ctrl)?;
    let state = ctrl.state_grid();
    let mut entries = Vec::with_capacity(chosen.len());
    for (&s, &u) in chosen {
        entries.push((state.fs_to_fb(s).map_err(DeterminizeError::Model)?, TerminalLabel::Input(u)));
    }
    let after = m.build_from_codes(&mut entries, TerminalLabel::NoInput);
    Ok(DeterminizationResult::assemble(algorithm, &m, before, after, state, false, priority))
}
