//! Synthetic controllers.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::controller::{Grid, SymbolicController};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("bad generator spec: {0}")]
pub struct BadSpec(pub String);

/// Affine law `u = A x + b`, one row of `A` per input dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Law {
    pub coeffs: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl Law {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.coeffs
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// Runs of consecutive states sharing a base input set, each state
    /// adding a few inputs of its own.
    Clustered { max_run: u32 },
    /// Each state admits the quantized law value plus some inputs within
    /// `window` cells of it. States whose law value leaves the input grid
    /// are left out.
    PlantedLaw { law: Law, window: u32 },
    /// Independent uniformly random input sets.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub state: Grid,
    pub input: Grid,
    pub family: Family,
    /// Chance that a state belongs to the domain.
    pub density: f64,
    /// Largest random input set drawn per state.
    pub max_set: usize,
}

impl GenSpec {
    fn check(&self) -> Result<(), BadSpec> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(BadSpec(format!("density {} outside [0, 1]", self.density)));
        }
        if self.max_set == 0 {
            return Err(BadSpec("max_set must be at least 1".into()));
        }
        if self.state.cell_count() > 1 << 24 {
            return Err(BadSpec("state grid too large to enumerate".into()));
        }
        if self.input.cell_count() > u64::from(u32::MAX) {
            return Err(BadSpec("input grid too large".into()));
        }
        match &self.family {
            Family::Clustered { max_run } if *max_run == 0 => Err(BadSpec("max_run must be at least 1".into())),
            Family::PlantedLaw { law, .. } => {
                let (n, m) = (self.state.len(), self.input.len());
                if law.coeffs.len() != m || law.offset.len() != m || law.coeffs.iter().any(|r| r.len() != n) {
                    return Err(BadSpec(format!("law must be {m} x {n} with {m} offsets")));
                }
                if law.coeffs.iter().flatten().chain(&law.offset).any(|v| !v.is_finite()) {
                    return Err(BadSpec("law coefficients must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn random_set<R: Rng>(rng: &mut R, inputs: u64, max_set: usize) -> BTreeSet<u32> {
    let size = rng.random_range(1..=max_set.min(inputs as usize));
    index::sample(rng, inputs as usize, size)
        .into_iter()
        .map(|u| u as u32)
        .collect()
}

/// Generates a controller; equal specs and seeds give equal controllers.
pub fn gen_controller(spec: &GenSpec, seed: u64) -> Result<SymbolicController, BadSpec> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctrl =
        SymbolicController::new(spec.state.clone(), spec.input.clone()).map_err(|e| BadSpec(e.to_string()))?;
    let states = spec.state.cell_count();
    let inputs = spec.input.cell_count();
    let put = |ctrl: &mut SymbolicController, s: u64, set: BTreeSet<u32>| {
        ctrl.insert(s, set).expect("generated entries are in range");
    };

    match &spec.family {
        Family::Uniform => {
            for s in 0..states {
                if rng.random_bool(spec.density) {
                    let set = random_set(&mut rng, inputs, spec.max_set);
                    put(&mut ctrl, s, set);
                }
            }
        }
        Family::Clustered { max_run } => {
            let mut s = 0;
            while s < states {
                let run = u64::from(rng.random_range(1..=*max_run)).min(states - s);
                let base = random_set(&mut rng, inputs, spec.max_set);
                for t in s..s + run {
                    if rng.random_bool(spec.density) {
                        let mut set = base.clone();
                        if rng.random_bool(0.5) {
                            set.insert(rng.random_range(0..inputs) as u32);
                        }
                        put(&mut ctrl, t, set);
                    }
                }
                s += run;
            }
        }
        Family::PlantedLaw { law, window } => {
            let w = i64::from(*window);
            for s in 0..states {
                if !rng.random_bool(spec.density) {
                    continue;
                }
                let x = spec.state.center(&spec.state.unindex_fs(s).expect("in range"));
                let Ok(center) = spec.input.quantize(&law.eval(&x)) else {
                    continue;
                };
                let mut set = BTreeSet::from([spec.input.index_fs(&center).expect("in range") as u32]);
                let mut cell = center.clone();
                for _ in 0..spec.max_set.saturating_sub(1) {
                    for (j, d) in spec.input.dims().iter().enumerate() {
                        let k = i64::from(center[j]) + rng.random_range(-w..=w);
                        cell[j] = k.clamp(0, i64::from(d.count) - 1) as u32;
                    }
                    set.insert(spec.input.index_fs(&cell).expect("clamped") as u32);
                }
                put(&mut ctrl, s, set);
            }
        }
    }
    Ok(ctrl)
}
