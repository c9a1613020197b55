use std::collections::BTreeMap;
use std::fmt;

use crate::controller::SymbolicController;
use crate::mtbdd::{Manager, NodeHandle, TerminalLabel};

use super::DeterminizationResult;

/// One way a determinized diagram fails to refine its controller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Domain state mapped to `NoInput`.
    MissingState { state: u64 },
    /// Domain state still mapped to several inputs.
    NotSingleton { state: u64, inputs: Vec<u32> },
    /// Domain state mapped to an input it does not admit.
    NotAdmissible { state: u64, input: u32 },
    /// State outside the domain received an input.
    ExtraState { state: u64, inputs: Vec<u32> },
    /// Diagram does not range over the controller's state bits.
    Shape(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingState { state } => write!(f, "state {state}: no input"),
            Violation::NotSingleton { state, inputs } => write!(f, "state {state}: still {inputs:?}"),
            Violation::NotAdmissible { state, input } => write!(f, "state {state}: input {input} not admissible"),
            Violation::ExtraState { state, inputs } => write!(f, "state {state}: outside domain but mapped to {inputs:?}"),
            Violation::Shape(msg) => write!(f, "{msg}"),
        }
    }
}

/// Checks a result against its controller; empty means valid.
pub fn validate(ctrl: &SymbolicController, result: &DeterminizationResult) -> Vec<Violation> {
    validate_diagram(ctrl, &result.manager, result.root, result.permissive)
}

/// Checks that the diagram maps every domain state to exactly one of its
/// admissible inputs and, unless `permissive`, leaves all other states
/// without input.
pub fn validate_diagram(ctrl: &SymbolicController, m: &Manager, root: NodeHandle, permissive: bool) -> Vec<Violation> {
    let state = ctrl.state_grid();
    let bits = state.codec().total_bits() as usize;
    if m.var_count() != bits {
        return vec![Violation::Shape(format!(
            "diagram has {} variables, state grid needs {bits}",
            m.var_count()
        ))];
    }
    let mut mapped: BTreeMap<u64, TerminalLabel> = BTreeMap::new();
    m.for_each_assignment(root, |code, label| {
        if let Ok(cell) = state.unindex_fb(code) {
            mapped.insert(state.index_fs(&cell).expect("valid cell"), label.clone());
        }
    });

    let mut out = Vec::new();
    for (s, admissible) in ctrl.iter() {
        match mapped.remove(&s) {
            None => out.push(Violation::MissingState { state: s }),
            Some(TerminalLabel::Input(u)) => {
                if admissible.binary_search(&u).is_err() {
                    out.push(Violation::NotAdmissible { state: s, input: u });
                }
            }
            Some(l) => out.push(Violation::NotSingleton {
                state: s,
                inputs: l.members().to_vec(),
            }),
        }
    }
    if !permissive {
        out.extend(mapped.into_iter().map(|(s, l)| Violation::ExtraState {
            state: s,
            inputs: l.members().to_vec(),
        }));
    }
    out
}
