//! `.ctl` text format.
//!
//! ```text
//! # optional comments
//! dims 2 1
//! 3 0 1        # state dimension 1: count lower width
//! 5 -1 0.5     # state dimension 2
//! 4 -2 1       # input dimension 1
//! 0 : 1 2      # state index : admissible input indexes
//! 7 : 3
//! ```
//!
//! Indexes are dense (`index_fs`). States not listed have no valid input.

use std::fmt::Write as _;

use super::{Dim, Grid, ModelError, SymbolicController};

fn perr(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse { line, msg: msg.into() }
}

pub fn parse_ctl(text: &str) -> Result<SymbolicController, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "missing `dims` header"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (n, m) = match parts.as_slice() {
        ["dims", n, m] => (
            n.parse::<usize>().map_err(|_| perr(ln, "bad state dimension count"))?,
            m.parse::<usize>().map_err(|_| perr(ln, "bad input dimension count"))?,
        ),
        _ => return Err(perr(ln, "expected `dims <n> <m>`")),
    };
    if n == 0 || m == 0 || n > 64 || m > 64 {
        return Err(perr(ln, "dimension counts must be in 1..=64"));
    }

    let mut dims = Vec::with_capacity(n + m);
    for _ in 0..n + m {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "missing dimension line"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let [count, lower, width] = f.as_slice() else {
            return Err(perr(ln, "expected `<count> <lower> <width>`"));
        };
        let count = count.parse::<u32>().map_err(|_| perr(ln, "bad cell count"))?;
        let lower = lower.parse::<f64>().map_err(|_| perr(ln, "bad lower bound"))?;
        let width = width.parse::<f64>().map_err(|_| perr(ln, "bad cell width"))?;
        dims.push(Dim::new(count, lower, width));
    }
    let input_dims = dims.split_off(n);
    let state = Grid::new(dims).map_err(|e| perr(ln, e.to_string()))?;
    let input = Grid::new(input_dims).map_err(|e| perr(ln, e.to_string()))?;
    let mut ctrl = SymbolicController::new(state, input).map_err(|e| perr(ln, e.to_string()))?;

    for (ln, l) in lines {
        let (s, rest) = l.split_once(':').ok_or_else(|| perr(ln, "expected `<state> : <inputs>`"))?;
        let s = s.trim().parse::<u64>().map_err(|_| perr(ln, "bad state index"))?;
        if ctrl.get(s).is_some() {
            return Err(perr(ln, format!("state {s} listed twice")));
        }
        let inputs = rest
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| perr(ln, format!("bad input index `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        ctrl.insert(s, inputs).map_err(|e| perr(ln, e.to_string()))?;
    }
    Ok(ctrl)
}

pub fn write_ctl(ctrl: &SymbolicController) -> String {
    let mut out = String::new();
    let (sg, ig) = (ctrl.state_grid(), ctrl.input_grid());
    writeln!(out, "dims {} {}", sg.len(), ig.len()).unwrap();
    for d in sg.dims().iter().chain(ig.dims()) {
        writeln!(out, "{} {} {}", d.count, d.lower, d.width).unwrap();
    }
    for (s, inputs) in ctrl.iter() {
        write!(out, "{s} :").unwrap();
        for u in inputs {
            write!(out, " {u}").unwrap();
        }
        out.push('\n');
    }
    out
}
