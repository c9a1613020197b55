//! Minimum (weighted) set cover: Chvátal's greedy algorithm and an exact
//! brute-force oracle for small families.

use std::collections::BTreeSet;

use itertools::Itertools;
use rustc_hash::FxHashMap;
use thiserror::Error;

/// Largest family the exact solver accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverError {
    #[error("element {0} is not contained in any set")]
    Infeasible(u64),
    #[error("family of {0} sets exceeds the exact-solver limit of {BRUTE_FORCE_LIMIT}")]
    SizeLimit(usize),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverInstance {
    universe: Vec<u64>,
    sets: Vec<Vec<u64>>,
    weights: Option<Vec<f64>>,
}

impl CoverInstance {
    /// Unit-weight instance. Set members outside the universe are ignored.
    pub fn new<U, F, S>(universe: U, family: F) -> Self
    where
        U: IntoIterator<Item = u64>,
        F: IntoIterator<Item = S>,
        S: IntoIterator<Item = u64>,
    {
        let universe: Vec<u64> = universe.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let sets = family
            .into_iter()
            .map(|s| s.into_iter().collect::<BTreeSet<_>>().into_iter().collect())
            .collect();
        CoverInstance {
            universe,
            sets,
            weights: None,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, CoverError> {
        if weights.len() != self.sets.len() {
            return Err(CoverError::Invalid(format!(
                "{} weights for {} sets",
                weights.len(),
                self.sets.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(CoverError::Invalid("weights must be finite and non-negative".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn universe(&self) -> &[u64] {
        &self.universe
    }

    pub fn sets(&self) -> &[Vec<u64>] {
        &self.sets
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Universe elements as dense ids, and per set the ids it covers.
    fn dense(&self) -> Result<Vec<Vec<usize>>, CoverError> {
        let id: FxHashMap<u64, usize> = self.universe.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let members: Vec<Vec<usize>> = self
            .sets
            .iter()
            .map(|s| s.iter().filter_map(|x| id.get(x).copied()).collect())
            .collect();
        let mut hit = vec![false; self.universe.len()];
        for m in &members {
            for &i in m {
                hit[i] = true;
            }
        }
        if let Some(i) = hit.iter().position(|h| !h) {
            return Err(CoverError::Infeasible(self.universe[i]));
        }
        Ok(members)
    }

    /// Whether the chosen sets cover the universe.
    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let covered: BTreeSet<u64> = chosen.iter().flat_map(|&j| self.sets[j].iter().copied()).collect();
        self.universe.iter().all(|x| covered.contains(x))
    }
}

/// Chosen set indexes, in the order they were selected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverSolution {
    pub sets: Vec<usize>,
}

impl CoverSolution {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn total_weight(&self, inst: &CoverInstance) -> f64 {
        self.sets.iter().map(|&j| inst.weight(j)).sum()
    }
}

/// Greedy cover: repeatedly takes the set with the most newly covered
/// elements per unit weight, lowest index on ties.
pub fn greedy_cover(inst: &CoverInstance) -> Result<CoverSolution, CoverError> {
    let members = inst.dense()?;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); inst.universe.len()];
    for (j, m) in members.iter().enumerate() {
        for &i in m {
            incident[i].push(j);
        }
    }
    let mut gain: Vec<usize> = members.iter().map(Vec::len).collect();
    let mut covered = vec![false; inst.universe.len()];
    let mut left = inst.universe.len();
    let mut chosen = Vec::new();

    while left > 0 {
        let mut best: Option<(usize, f64)> = None;
        for (j, &g) in gain.iter().enumerate() {
            if g == 0 {
                continue;
            }
            let w = inst.weight(j);
            let ratio = if w == 0.0 { f64::INFINITY } else { g as f64 / w };
            if best.is_none_or(|(_, r)| ratio > r) {
                best = Some((j, ratio));
            }
        }
        let (j, _) = best.expect("feasible instance always has a useful set");
        chosen.push(j);
        for &i in &members[j] {
            if !covered[i] {
                covered[i] = true;
                left -= 1;
                for &k in &incident[i] {
                    gain[k] -= 1;
                }
            }
        }
    }
    Ok(CoverSolution { sets: chosen })
}

/// Exact minimum cover by exhaustive search.
///
/// Unit weights minimize cardinality; weighted instances minimize total
/// weight. Ties go to the lexicographically smallest index set, which is
/// returned sorted.
pub fn brute_force_cover(inst: &CoverInstance) -> Result<CoverSolution, CoverError> {
    let k = inst.sets.len();
    if k > BRUTE_FORCE_LIMIT {
        return Err(CoverError::SizeLimit(k));
    }
    let members = inst.dense()?;
    let words = inst.universe.len().div_ceil(64);
    let masks: Vec<Vec<u64>> = members
        .iter()
        .map(|m| {
            let mut w = vec![0u64; words];
            for &i in m {
                w[i / 64] |= 1 << (i % 64);
            }
            w
        })
        .collect();
    let n = inst.universe.len();
    let covers = |chosen: &[usize]| -> bool {
        let mut acc = vec![0u64; words];
        for &j in chosen {
            for (a, b) in acc.iter_mut().zip(&masks[j]) {
                *a |= b;
            }
        }
        acc.iter().map(|w| w.count_ones() as usize).sum::<usize>() == n
    };

    if !inst.is_weighted() {
        for size in 0..=k {
            if let Some(c) = (0..k).combinations(size).find(|c| covers(c)) {
                return Ok(CoverSolution { sets: c });
            }
        }
        unreachable!("the full family covers a feasible universe");
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << k) {
        let chosen: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).collect();
        if !covers(&chosen) {
            continue;
        }
        let w: f64 = chosen.iter().map(|&j| inst.weight(j)).sum();
        let better = match &best {
            None => true,
            Some((bw, bc)) => w < *bw || (w == *bw && chosen < *bc),
        };
        if better {
            best = Some((w, chosen));
        }
    }
    Ok(CoverSolution {
        sets: best.expect("full family covers").1,
    })
}

/// Harmonic number `H(d) = 1 + 1/2 + ... + 1/d`.
pub fn harmonic(d: usize) -> f64 {
    (1..=d).map(|i| 1.0 / i as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> CoverInstance {
        CoverInstance::new(1..=5, vec![vec![1, 2, 3], vec![2, 4], vec![3, 4], vec![4, 5]])
    }

    #[test]
    fn trivial_instance() {
        let inst = CoverInstance::new([1], vec![vec![1]]);
        assert_eq!(greedy_cover(&inst).unwrap().sets, vec![0]);
        assert_eq!(brute_force_cover(&inst).unwrap().sets, vec![0]);
    }

    #[test]
    fn five_element_instance() {
        let inst = five();
        assert_eq!(greedy_cover(&inst).unwrap().sets, vec![0, 3]);
        let opt = brute_force_cover(&inst).unwrap();
        assert_eq!(opt.sets, vec![0, 3]);
    }

    #[test]
    fn weighted_ratio_rule() {
        let inst = CoverInstance::new([1, 2], vec![vec![1, 2], vec![1], vec![2]])
            .with_weights(vec![10.0, 1.0, 1.0])
            .unwrap();
        assert_eq!(greedy_cover(&inst).unwrap().sets, vec![1, 2]);
        assert_eq!(brute_force_cover(&inst).unwrap().sets, vec![1, 2]);
    }

    #[test]
    fn zero_weight_sets_go_first() {
        let inst = CoverInstance::new([1, 2, 3], vec![vec![1, 2, 3], vec![3]])
            .with_weights(vec![1.0, 0.0])
            .unwrap();
        assert_eq!(greedy_cover(&inst).unwrap().sets, vec![1, 0]);
    }

    #[test]
    fn infeasible_and_limits() {
        let inst = CoverInstance::new([1, 2], vec![vec![1]]);
        assert_eq!(greedy_cover(&inst), Err(CoverError::Infeasible(2)));
        assert_eq!(brute_force_cover(&inst), Err(CoverError::Infeasible(2)));
        let big = CoverInstance::new([0], (0..21).map(|_| vec![0u64]));
        assert_eq!(brute_force_cover(&big), Err(CoverError::SizeLimit(21)));
        assert!(CoverInstance::new([0], vec![vec![0]]).with_weights(vec![-1.0]).is_err());
    }

    #[test]
    fn empty_universe_needs_nothing() {
        let inst = CoverInstance::new([], vec![vec![1]]);
        assert!(greedy_cover(&inst).unwrap().is_empty());
        assert!(brute_force_cover(&inst).unwrap().is_empty());
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(3) - 11.0 / 6.0).abs() < 1e-15);
    }
}
