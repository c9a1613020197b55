#![allow(dead_code)]

use ctrldet::bench::{gen_controller, Family, GenSpec, Law};
use ctrldet::controller::{Dim, Grid, SymbolicController};
use ctrldet::mtbdd::TerminalLabel;
use rand::Rng;

/// The four-cell example: states 0..4 admit {1,5}, {3,4}, {1,2}, {0,3}.
pub fn four_cells() -> SymbolicController {
    SymbolicController::from_entries(
        Grid::integer(&[4]).unwrap(),
        Grid::integer(&[6]).unwrap(),
        [(0, vec![1, 5]), (1, vec![4, 3]), (2, vec![1, 2]), (3, vec![0, 3])],
    )
    .unwrap()
}

fn random_counts<R: Rng>(rng: &mut R, dims: usize, max_bits: u32) -> Vec<u32> {
    let mut left = max_bits;
    (0..dims)
        .map(|j| {
            let share = left / (dims - j) as u32;
            let bits = rng.random_range(1..=share.max(1));
            left -= bits.min(left);
            rng.random_range(1..=1u32 << bits)
        })
        .collect()
}

/// Random non-empty controller over at most `max_bits` state bits, drawn
/// from all generator families.
pub fn random_controller<R: Rng>(rng: &mut R, max_bits: u32) -> SymbolicController {
    loop {
        let n = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=2usize);
        let state = Grid::new(random_counts(rng, n, max_bits).into_iter().map(|c| Dim::new(c, 0.0, 1.0)).collect())
            .unwrap();
        let input = Grid::new(random_counts(rng, m, 6).into_iter().map(|c| Dim::new(c, 0.0, 1.0)).collect())
            .unwrap();
        let family = match rng.random_range(0..3) {
            0 => Family::Uniform,
            1 => Family::Clustered {
                max_run: rng.random_range(1..=16),
            },
            _ => Family::PlantedLaw {
                law: Law {
                    coeffs: (0..m)
                        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
                        .collect(),
                    offset: (0..m).map(|_| rng.random_range(0.0..4.0)).collect(),
                },
                window: rng.random_range(0..=2),
            },
        };
        let spec = GenSpec {
            state,
            input,
            family,
            density: rng.random_range(0.05..=1.0),
            max_set: rng.random_range(1..=4),
        };
        let c = gen_controller(&spec, rng.random()).unwrap();
        if !c.is_empty() {
            return c;
        }
    }
}

pub fn label_alphabet() -> Vec<TerminalLabel> {
    vec![
        TerminalLabel::NoInput,
        TerminalLabel::Input(0),
        TerminalLabel::Input(1),
        TerminalLabel::Input(2),
        TerminalLabel::set([0, 1]).unwrap(),
        TerminalLabel::set([1, 2, 5]).unwrap(),
    ]
}
