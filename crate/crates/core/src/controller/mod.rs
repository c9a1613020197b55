//! Quantized set-valued controllers and their decision-diagram encodings.

mod ctl;
mod grid;

pub use ctl::{parse_ctl, write_ctl};
pub use grid::{BitCodec, Dim, Grid};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mtbdd::{DiagramError, Manager, NodeHandle, TerminalLabel, VariableOrder};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("index out of range: {0}")]
    Range(String),
    #[error("invalid bit-field index: {0}")]
    InvalidIndex(String),
    #[error("point outside grid: {0}")]
    OutOfDomain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid controller: {0}")]
    InvalidController(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unexpected diagram shape: {0}")]
    Format(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// Finite set-valued map from state cells to admissible input cells.
///
/// Keys are `index_fs` state indexes, values sorted non-empty sets of
/// `index_fs` input indexes. States without an entry have no valid input.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicController {
    state: Grid,
    input: Grid,
    map: BTreeMap<u64, Vec<u32>>,
}

impl SymbolicController {
    pub fn new(state: Grid, input: Grid) -> Result<Self, ModelError> {
        if input.cell_count() > u64::from(u32::MAX) + 1 {
            return Err(ModelError::InvalidGrid("input grid exceeds 2^32 cells".into()));
        }
        Ok(SymbolicController {
            state,
            input,
            map: BTreeMap::new(),
        })
    }

    pub fn from_entries<I, S>(state: Grid, input: Grid, entries: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (u64, S)>,
        S: IntoIterator<Item = u32>,
    {
        let mut c = Self::new(state, input)?;
        for (s, inputs) in entries {
            c.insert(s, inputs)?;
        }
        Ok(c)
    }

    /// Sets the admissible inputs of state `s`, replacing any previous entry.
    pub fn insert<S: IntoIterator<Item = u32>>(&mut self, s: u64, inputs: S) -> Result<(), ModelError> {
        if s >= self.state.cell_count() {
            return Err(ModelError::Range(format!("state {s} outside 0..{}", self.state.cell_count())));
        }
        let mut v: Vec<u32> = inputs.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(ModelError::InvalidController(format!("state {s} has an empty input set")));
        }
        if let Some(&bad) = v.iter().find(|&&u| u64::from(u) >= self.input.cell_count()) {
            return Err(ModelError::Range(format!(
                "input {bad} outside 0..{}",
                self.input.cell_count()
            )));
        }
        self.map.insert(s, v);
        Ok(())
    }

    pub fn state_grid(&self) -> &Grid {
        &self.state
    }

    pub fn input_grid(&self) -> &Grid {
        &self.input
    }

    pub fn get(&self, s: u64) -> Option<&[u32]> {
        self.map.get(&s).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[u32])> + '_ {
        self.map.iter().map(|(&s, v)| (s, v.as_slice()))
    }

    pub fn domain(&self) -> impl Iterator<Item = u64> + '_ {
        self.map.keys().copied()
    }

    /// Number of states with at least one admissible input.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.map.values().all(|v| v.len() == 1)
    }

    /// Number of admissible (state, input) pairs.
    pub fn pair_count(&self) -> usize {
        self.map.values().map(Vec::len).sum()
    }

    /// Controller with the same grids keeping only `states`.
    pub fn restrict<I: IntoIterator<Item = u64>>(&self, states: I) -> Self {
        let map = states
            .into_iter()
            .filter_map(|s| self.map.get(&s).map(|v| (s, v.clone())))
            .collect();
        SymbolicController {
            state: self.state.clone(),
            input: self.input.clone(),
            map,
        }
    }

    /// Interleaved order over the state bits.
    pub fn state_order(&self) -> VariableOrder {
        self.state.codec().interleaved_order()
    }

    /// Fresh manager over the state bits in interleaved order.
    pub fn state_manager(&self) -> Manager {
        Manager::new(self.state_order())
    }

    /// Order for the characteristic-function encoding: state bits, then
    /// input bits, each interleaved.
    pub fn relation_order(&self) -> Result<VariableOrder, ModelError> {
        let sb = self.state.codec().total_bits();
        let ib = self.input.codec().total_bits();
        if (sb + ib) as usize > crate::mtbdd::MAX_VARS {
            return Err(ModelError::InvalidGrid(format!(
                "{} state+input bits exceeds {}",
                sb + ib,
                crate::mtbdd::MAX_VARS
            )));
        }
        let mut levels = self.state.codec().interleaved_levels(0);
        levels.extend(self.input.codec().interleaved_levels(sb as u8));
        Ok(VariableOrder::from_levels(levels)?)
    }

    fn label_of(v: &[u32]) -> TerminalLabel {
        if v.len() == 1 {
            TerminalLabel::Input(v[0])
        } else {
            TerminalLabel::Set(v.to_vec().into_boxed_slice())
        }
    }

    fn check_state_manager(&self, m: &Manager) -> Result<(), ModelError> {
        let bits = self.state.codec().total_bits() as usize;
        if m.var_count() != bits {
            return Err(ModelError::Format(format!(
                "manager has {} variables, state grid needs {bits}",
                m.var_count()
            )));
        }
        Ok(())
    }

    /// MTBDD mapping the state bits to the state's input set, `NoInput`
    /// elsewhere. Works under any variable order of `m`.
    pub fn encode_mtbdd(&self, m: &mut Manager) -> Result<NodeHandle, ModelError> {
        self.check_state_manager(m)?;
        let mut entries = Vec::with_capacity(self.map.len());
        for (&s, v) in &self.map {
            entries.push((self.state.fs_to_fb(s)?, Self::label_of(v)));
        }
        Ok(m.build_from_codes(&mut entries, TerminalLabel::NoInput))
    }

    /// Characteristic-function BDD over state bits then input bits
    /// (see [`SymbolicController::relation_order`]).
    pub fn encode_bdd(&self, m: &mut Manager) -> Result<NodeHandle, ModelError> {
        let sb = self.state.codec().total_bits();
        if m.var_count() != (sb + self.input.codec().total_bits()) as usize {
            return Err(ModelError::Format("manager variable count does not match grids".into()));
        }
        let mut entries = Vec::with_capacity(self.pair_count());
        for (&s, v) in &self.map {
            let sc = self.state.fs_to_fb(s)?;
            for &u in v {
                let uc = self.input.fs_to_fb(u64::from(u))?;
                entries.push((sc | (uc << sb), TerminalLabel::TRUE));
            }
        }
        Ok(m.build_from_codes(&mut entries, TerminalLabel::FALSE))
    }

    /// Reads a controller back from a state-bit MTBDD.
    ///
    /// Codes that are not valid grid cells are ignored.
    pub fn decode_mtbdd(m: &Manager, root: NodeHandle, state: Grid, input: Grid) -> Result<Self, ModelError> {
        let mut c = Self::new(state, input)?;
        c.check_state_manager(m)?;
        let mut err = None;
        m.for_each_assignment(root, |code, label| {
            if err.is_some() {
                return;
            }
            let Ok(cell) = c.state.unindex_fb(code) else { return };
            let s = c.state.index_fs(&cell).expect("decoded cell is in range");
            if let Err(e) = c.insert(s, label.members().iter().copied()) {
                err = Some(e);
            }
        });
        match err {
            Some(ModelError::Range(msg)) => Err(ModelError::Format(msg)),
            Some(e) => Err(e),
            None => Ok(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> SymbolicController {
        SymbolicController::from_entries(
            Grid::integer(&[2]).unwrap(),
            Grid::integer(&[3]).unwrap(),
            [(0, vec![1]), (1, vec![1])],
        )
        .unwrap()
    }

    #[test]
    fn empty_controller_is_one_no_input_terminal() {
        let c = SymbolicController::new(Grid::integer(&[6]).unwrap(), Grid::integer(&[2]).unwrap()).unwrap();
        let mut m = c.state_manager();
        let r = c.encode_mtbdd(&mut m).unwrap();
        assert_eq!(m.node_count(r), 1);
        assert_eq!(m.label(r), Some(&TerminalLabel::NoInput));
        let back = SymbolicController::decode_mtbdd(&m, r, c.state_grid().clone(), c.input_grid().clone()).unwrap();
        assert!(back.is_empty());

        let mut b = Manager::new(c.relation_order().unwrap());
        let r = c.encode_bdd(&mut b).unwrap();
        assert_eq!(b.label(r), Some(&TerminalLabel::FALSE));
    }

    #[test]
    fn identical_sets_collapse() {
        let c = two_state();
        let mut m = c.state_manager();
        let r = c.encode_mtbdd(&mut m).unwrap();
        assert_eq!(m.node_count(r), 1);
        assert_eq!(m.label(r), Some(&TerminalLabel::Input(1)));
    }

    #[test]
    fn bdd_of_single_pair() {
        // g(0) = {0} with one state bit and one input bit: f = !s & !u,
        // two decision nodes over the two terminals.
        let c = SymbolicController::from_entries(
            Grid::integer(&[2]).unwrap(),
            Grid::integer(&[2]).unwrap(),
            [(0, vec![0])],
        )
        .unwrap();
        let mut m = Manager::new(c.relation_order().unwrap());
        let r = c.encode_bdd(&mut m).unwrap();
        assert_eq!(m.node_census(r), (2, 2));
        assert_eq!(m.eval(r, 0), &TerminalLabel::TRUE);
        for code in 1..4 {
            assert_eq!(m.eval(r, code), &TerminalLabel::FALSE);
        }
    }

    #[test]
    fn insert_validates() {
        let mut c = two_state();
        assert!(matches!(c.insert(2, [0]), Err(ModelError::Range(_))));
        assert!(matches!(c.insert(0, [3]), Err(ModelError::Range(_))));
        assert!(matches!(c.insert(0, []), Err(ModelError::InvalidController(_))));
    }

    #[test]
    fn decode_rejects_out_of_range_inputs() {
        let c = two_state();
        let mut m = c.state_manager();
        let t = m.mk_terminal(TerminalLabel::Input(9));
        let err = SymbolicController::decode_mtbdd(&m, t, c.state_grid().clone(), c.input_grid().clone());
        assert!(matches!(err, Err(ModelError::Format(_))));
    }

    #[test]
    fn singleton_domain_round_trips() {
        let c = SymbolicController::from_entries(
            Grid::integer(&[3, 5]).unwrap(),
            Grid::integer(&[4]).unwrap(),
            [(11, vec![2, 3])],
        )
        .unwrap();
        let mut m = c.state_manager();
        let r = c.encode_mtbdd(&mut m).unwrap();
        let back = SymbolicController::decode_mtbdd(&m, r, c.state_grid().clone(), c.input_grid().clone()).unwrap();
        assert_eq!(back, c);
    }
}
