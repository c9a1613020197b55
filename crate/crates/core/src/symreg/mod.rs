//! Determinization by symbolic regression.
//!
//! A population of grammar-derived expressions is evolved so that, at each
//! state's cell center, the expression quantizes to an admissible input.
//! Constants of the fittest individuals are tuned by sep-CMA-ES each
//! generation. The winner is verified on every domain state; the states it
//! misses are determinized by a diagram algorithm and both parts are stored
//! in one diagram.

pub mod cmaes;
pub mod parse;
pub mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::controller::{Grid, SymbolicController};
use crate::determinize::{self, Algorithm, DeterminizationResult, DeterminizeError, Options};

pub use parse::{parse_expression, parse_expressions, Expr, ParseError};
pub use tree::{Genotype, Node, Symbol};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SrConfig {
    /// Down-sampled state-set size `λ`.
    pub lambda: usize,
    /// GGGP generations `N`.
    pub generations: usize,
    /// Population size `M`.
    pub population: usize,
    /// Maximum tree depth `d`.
    pub max_depth: usize,
    /// Crossover chance `c_c`.
    pub crossover: f64,
    /// Mutation chance `c_m`.
    pub mutation: f64,
    /// Initial CMA-ES step size `σ₀`.
    pub sigma0: f64,
    /// CMA-ES generations `N_ES`.
    pub es_generations: usize,
    /// Determinizes the states the expression misses.
    pub fallback: Algorithm,
}

impl Default for SrConfig {
    fn default() -> Self {
        SrConfig {
            lambda: 1000,
            generations: 50,
            population: 32,
            max_depth: 7,
            crossover: 0.5,
            mutation: 0.5,
            sigma0: 1.0,
            es_generations: 10,
            fallback: Algorithm::Lga,
        }
    }
}

impl SrConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.lambda == 0 || self.population == 0 || self.es_generations == 0 {
            return Err("lambda, M and N_ES must be at least 1".into());
        }
        if self.max_depth < Symbol::Strt.min_height() {
            return Err(format!("d must be at least {}", Symbol::Strt.min_height()));
        }
        if !(0.0..=1.0).contains(&self.crossover) || !(0.0..=1.0).contains(&self.mutation) {
            return Err("c_c and c_m must lie in [0, 1]".into());
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err("sigma0 must be positive".into());
        }
        if self.fallback == Algorithm::Sr {
            return Err("fallback must be a diagram algorithm".into());
        }
        Ok(())
    }

    /// Reads `key = value` lines over these defaults. Keys: `lambda`, `N`,
    /// `M`, `d`, `c_c`, `c_m`, `sigma0`, `N_ES`, `fallback`. `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SrConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| ConfigError { line, msg };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str) -> Result<T, String> {
                v.parse().map_err(|_| format!("bad value '{v}'"))
            }
            match key {
                "lambda" => cfg.lambda = num(value).map_err(err)?,
                "N" => cfg.generations = num(value).map_err(err)?,
                "M" => cfg.population = num(value).map_err(err)?,
                "d" => cfg.max_depth = num(value).map_err(err)?,
                "c_c" => cfg.crossover = num(value).map_err(err)?,
                "c_m" => cfg.mutation = num(value).map_err(err)?,
                "sigma0" => cfg.sigma0 = num(value).map_err(err)?,
                "N_ES" => cfg.es_generations = num(value).map_err(err)?,
                "fallback" => cfg.fallback = value.parse().map_err(err)?,
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }
        cfg.validate().map_err(|msg| ConfigError { line: 0, msg })?;
        Ok(cfg)
    }
}

/// Hit rate of an expression on a state sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fitness {
    pub value: f64,
    pub hits: usize,
    pub total: usize,
    /// Samples where the expression was NaN or infinite; counted as misses.
    pub non_finite: usize,
}

/// Per-state data the expression is scored against.
struct Case<'a> {
    x: Vec<f64>,
    admissible: &'a [u32],
    /// Input-cell centers of `admissible`, scaled to cell widths.
    targets: Vec<Vec<f64>>,
}

struct Dataset<'a> {
    cases: Vec<Case<'a>>,
    input: &'a Grid,
}

impl<'a> Dataset<'a> {
    fn new(ctrl: &'a SymbolicController, states: &[u64]) -> Self {
        let state = ctrl.state_grid();
        let input = ctrl.input_grid();
        let cases = states
            .iter()
            .map(|&s| {
                let admissible = ctrl.get(s).expect("sample lies in the domain");
                let x = state.center(&state.unindex_fs(s).expect("domain state"));
                let targets = admissible
                    .iter()
                    .map(|&u| {
                        let cell = input.unindex_fs(u64::from(u)).expect("admissible input");
                        cell.iter().map(|&k| f64::from(k)).collect()
                    })
                    .collect();
                Case { x, admissible, targets }
            })
            .collect();
        Dataset { cases, input }
    }

    /// Input index the outputs quantize to, if any.
    fn input_of(&self, y: &[f64]) -> Option<u32> {
        let cell = self.input.quantize(y).ok()?;
        Some(self.input.index_fs(&cell).ok()? as u32)
    }

    fn fitness(&self, g: &Genotype) -> Fitness {
        let mut y = Vec::new();
        let (mut hits, mut non_finite) = (0, 0);
        for c in &self.cases {
            g.eval(&c.x, &mut y);
            if y.iter().any(|v| !v.is_finite()) {
                non_finite += 1;
            } else if self.input_of(&y).is_some_and(|u| c.admissible.binary_search(&u).is_ok()) {
                hits += 1;
            }
        }
        let total = self.cases.len();
        Fitness {
            value: if total == 0 { 0.0 } else { hits as f64 / total as f64 },
            hits,
            total,
            non_finite,
        }
    }

    /// Misses plus a term in `[0, 1)` measuring how far the misses are from
    /// an admissible input, in input-cell units.
    fn tuning_objective(&self, g: &Genotype) -> f64 {
        let mut y = Vec::new();
        let (mut misses, mut distance) = (0usize, 0.0f64);
        for c in &self.cases {
            g.eval(&c.x, &mut y);
            if y.iter().any(|v| !v.is_finite()) {
                misses += 1;
                distance += 1e12;
                continue;
            }
            if self.input_of(&y).is_some_and(|u| c.admissible.binary_search(&u).is_ok()) {
                continue;
            }
            misses += 1;
            let t: Vec<f64> = y
                .iter()
                .zip(self.input.dims())
                .map(|(v, d)| (v - d.lower) / d.width)
                .collect();
            distance += c
                .targets
                .iter()
                .map(|k| {
                    t.iter()
                        .zip(k)
                        .map(|(a, b)| ((a - b).abs() - 0.5).max(0.0).powi(2))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
                .min(1e12);
        }
        misses as f64 + distance / (1.0 + distance)
    }
}

/// Hit rate of `g` on `sample`, with cell-center coordinates and the input
/// grid's quantizer.
pub fn fitness(g: &Genotype, ctrl: &SymbolicController, sample: &[u64]) -> Fitness {
    Dataset::new(ctrl, sample).fitness(g)
}

/// Seeded uniform sample of at most `lambda` states without replacement,
/// in ascending order.
pub fn downsample(states: &[u64], lambda: usize, seed: u64) -> Vec<u64> {
    if states.len() <= lambda {
        return states.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, states.len(), lambda).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| states[i]).collect()
}

#[derive(Clone, Debug)]
pub struct SrResult {
    pub best: Genotype,
    pub expression: String,
    /// Fitness of `best` on the down-sample.
    pub fitness: Fitness,
    /// Best-so-far fitness after initialization and after each generation.
    pub history: Vec<f64>,
    /// Domain states the expression handles.
    pub fitted: BTreeSet<u64>,
    /// Determinization of the remaining domain states.
    pub fallback: Option<DeterminizationResult>,
    /// Expression choices and fallback choices in one diagram.
    pub combined: DeterminizationResult,
    pub seed: u64,
}

impl SrResult {
    /// Fraction of all domain states the expression handles.
    pub fn full_fitness(&self) -> f64 {
        let total = self.fitted.len() + self.fallback.as_ref().map_or(0, |f| f.chosen.len());
        self.fitted.len() as f64 / total as f64
    }
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [(Genotype, Fitness)], rng: &mut R) -> &'a Genotype {
    const SIZE: usize = 4;
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..SIZE {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.1.value > best.1.value {
            best = c;
        }
    }
    &best.0
}

fn fittest(pop: &[(Genotype, Fitness)]) -> usize {
    let mut best = 0;
    for (i, p) in pop.iter().enumerate() {
        if p.1.value > pop[best].1.value {
            best = i;
        }
    }
    best
}

/// Evolves an expression for `ctrl` and completes it into a determinization.
pub fn evolve(ctrl: &SymbolicController, cfg: &SrConfig, seed: u64) -> Result<SrResult, DeterminizeError> {
    if ctrl.is_empty() {
        return Err(DeterminizeError::EmptyController);
    }
    cfg.validate().map_err(DeterminizeError::Config)?;
    let domain: Vec<u64> = ctrl.domain().collect();
    let sample = downsample(&domain, cfg.lambda, seed);
    let data = Dataset::new(ctrl, &sample);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    let (outputs, vars, d) = (ctrl.input_grid().len(), ctrl.state_grid().len(), cfg.max_depth);
    let score = |gs: Vec<Genotype>| -> Vec<(Genotype, Fitness)> {
        gs.into_par_iter()
            .map(|g| {
                let f = data.fitness(&g);
                (g, f)
            })
            .collect()
    };
    let mut pop = score((0..cfg.population).map(|_| Genotype::random(outputs, vars, d, &mut rng)).collect());
    let mut best = pop[fittest(&pop)].clone();
    let mut history = vec![best.1.value];

    let tuned = cfg.population.div_ceil(4);
    for _ in 0..cfg.generations {
        let mut next = vec![best.0.clone()];
        while next.len() < cfg.population {
            let mut a = tournament(&pop, &mut rng).clone();
            let mut b = tournament(&pop, &mut rng).clone();
            if rng.random_bool(cfg.crossover) {
                a.crossover(&mut b, d, &mut rng);
            }
            for g in [&mut a, &mut b] {
                if rng.random_bool(cfg.mutation) {
                    g.mutate(d, &mut rng);
                }
            }
            next.push(a);
            if next.len() < cfg.population {
                next.push(b);
            }
        }
        pop = score(next);

        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&i, &j| pop[j].1.value.total_cmp(&pop[i].1.value));
        let jobs: Vec<(usize, u64)> = ranked[..tuned].iter().map(|&i| (i, rng.next_u64())).collect();
        let improved: Vec<(usize, Option<(Genotype, Fitness)>)> = jobs
            .into_par_iter()
            .map(|(i, s)| {
                let g = &pop[i].0;
                let x0 = g.constants();
                let mut trial = g.clone();
                let start = data.tuning_objective(g);
                let opt = cmaes::minimize(&x0, cfg.sigma0, cfg.es_generations, &mut ChaCha8Rng::seed_from_u64(s), |c| {
                    trial.set_constants(c);
                    data.tuning_objective(&trial)
                });
                if opt.value < start && opt.x.iter().all(|v| v.is_finite()) {
                    trial.set_constants(&opt.x);
                    let f = data.fitness(&trial);
                    (i, Some((trial, f)))
                } else {
                    (i, None)
                }
            })
            .collect();
        for (i, r) in improved {
            if let Some(r) = r {
                pop[i] = r;
            }
        }

        let i = fittest(&pop);
        if pop[i].1.value > best.1.value {
            best = pop[i].clone();
        }
        history.push(best.1.value);
    }

    complete(ctrl, cfg, best.0, best.1, history, seed)
}

/// Verifies the expression on every domain state and determinizes the rest.
fn complete(
    ctrl: &SymbolicController,
    cfg: &SrConfig,
    best: Genotype,
    fitness: Fitness,
    history: Vec<f64>,
    seed: u64,
) -> Result<SrResult, DeterminizeError> {
    let domain: Vec<u64> = ctrl.domain().collect();
    let data = Dataset::new(ctrl, &domain);
    let mut chosen = BTreeMap::new();
    let mut fitted = BTreeSet::new();
    let mut misses = Vec::new();
    let mut y = Vec::new();
    for (&s, c) in domain.iter().zip(&data.cases) {
        best.eval(&c.x, &mut y);
        match data.input_of(&y) {
            Some(u) if y.iter().all(|v| v.is_finite()) && c.admissible.binary_search(&u).is_ok() => {
                chosen.insert(s, u);
                fitted.insert(s);
            }
            _ => misses.push(s),
        }
    }
    let fallback = if misses.is_empty() {
        None
    } else {
        let rest = ctrl.restrict(misses);
        let r = determinize::run(cfg.fallback, &rest, Options::default())?;
        chosen.extend(r.chosen.iter().map(|(&s, &u)| (s, u)));
        Some(r)
    };
    let combined = determinize::from_choice_map(Algorithm::Sr, ctrl, &chosen, None)?;
    Ok(SrResult {
        expression: best.to_string(),
        best,
        fitness,
        history,
        fitted,
        fallback,
        combined,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Dim;
    use crate::determinize::validate;

    /// States 0..n on [0, n), inputs 0..2n on [0, 2n): g(s) ⊇ {2s}.
    fn doubling(n: u32) -> SymbolicController {
        let state = Grid::new(vec![Dim::new(n, 0.0, 1.0)]).unwrap();
        let input = Grid::new(vec![Dim::new(2 * n, 0.0, 1.0)]).unwrap();
        SymbolicController::from_entries(state, input, (0..n).map(|s| (u64::from(s), vec![2 * s, (2 * s + 3) % (2 * n)])))
            .unwrap()
    }

    /// `c + k * x1`.
    fn linear(c: f64, k: f64) -> Genotype {
        let lin = Node {
            symbol: Symbol::Lin,
            rule: 0,
            value: 0.0,
            children: vec![Node::constant(k)],
        };
        let expr = Node {
            symbol: Symbol::Expr,
            rule: 0,
            value: 0.0,
            children: vec![lin],
        };
        let strt = Node {
            symbol: Symbol::Strt,
            rule: 0,
            value: 0.0,
            children: vec![Node::constant(c), expr],
        };
        Genotype { trees: vec![strt], vars: 1 }
    }

    #[test]
    fn exact_law_has_full_fitness() {
        let c = doubling(10);
        let domain: Vec<u64> = c.domain().collect();
        let f = fitness(&linear(0.0, 2.0), &c, &domain);
        assert_eq!((f.value, f.hits, f.non_finite), (1.0, 10, 0));
    }

    #[test]
    fn constant_outside_every_set_has_zero_fitness() {
        let c = doubling(10);
        let domain: Vec<u64> = c.domain().collect();
        assert_eq!(fitness(&linear(1000.0, 0.0), &c, &domain).value, 0.0);
    }

    #[test]
    fn fitness_matches_per_state_count() {
        // g(s) = {s mod 2} over inputs {0, 1}; the expression 0.6 x rounds
        // to 0 for x = 0 and to 1 for x in 1..=2, and leaves the grid beyond.
        let state = Grid::integer(&[6]).unwrap();
        let input = Grid::integer(&[2]).unwrap();
        let c = SymbolicController::from_entries(state, input, (0..6u32).map(|s| (u64::from(s), vec![s % 2]))).unwrap();
        let g = linear(0.0, 0.6);
        let mut hits = 0;
        for s in 0..6u32 {
            let y = 0.6 * f64::from(s);
            let q = if y <= 1.5 { Some(y.round() as u32) } else { None };
            if q == Some(s % 2) {
                hits += 1;
            }
        }
        let all: Vec<u64> = (0..6).collect();
        assert_eq!(fitness(&g, &c, &all).hits, hits);
        assert_eq!(hits, 2);
    }

    #[test]
    fn non_finite_outputs_are_flagged_misses() {
        let c = doubling(4);
        let f = fitness(&linear(f64::INFINITY, 1.0), &c, &[0, 1]);
        assert_eq!((f.hits, f.non_finite), (0, 2));
    }

    #[test]
    fn downsampling() {
        let states: Vec<u64> = (0..100).collect();
        assert_eq!(downsample(&states[..10], 20, 1), states[..10].to_vec());
        let a = downsample(&states, 30, 42);
        assert_eq!(a.len(), 30);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, downsample(&states, 30, 42));
        assert_ne!(a, downsample(&states, 30, 43));
    }

    #[test]
    fn config_parsing() {
        let cfg = SrConfig::parse("# table\nlambda = 200\nN=5\nM = 8\nc_c = 0.25 # note\nfallback = ga\n").unwrap();
        assert_eq!(cfg.lambda, 200);
        assert_eq!(cfg.generations, 5);
        assert_eq!(cfg.population, 8);
        assert_eq!(cfg.crossover, 0.25);
        assert_eq!(cfg.fallback, Algorithm::Ga);
        assert_eq!(cfg.sigma0, 1.0);
        assert_eq!(SrConfig::parse("x = 1").unwrap_err().line, 1);
        assert_eq!(SrConfig::parse("\nM = many").unwrap_err().line, 2);
        assert!(SrConfig::parse("d = 3").is_err());
        assert!(SrConfig::parse("c_m = 1.5").is_err());
        assert!(SrConfig::parse("fallback = sr").is_err());
    }

    #[test]
    fn zero_generations_still_valid() {
        let c = doubling(16);
        let cfg = SrConfig {
            generations: 0,
            population: 8,
            ..SrConfig::default()
        };
        let r = evolve(&c, &cfg, 3).unwrap();
        assert_eq!(r.history.len(), 1);
        assert!(validate(&c, &r.combined).is_empty());
        assert_eq!(r.fitted.len() + r.fallback.as_ref().map_or(0, |f| f.chosen.len()), 16);
    }

    #[test]
    fn seeded_runs_are_reproducible_and_monotone() {
        let c = doubling(20);
        let cfg = SrConfig {
            generations: 4,
            population: 8,
            es_generations: 3,
            ..SrConfig::default()
        };
        let a = evolve(&c, &cfg, 11).unwrap();
        let b = evolve(&c, &cfg, 11).unwrap();
        assert_eq!(a.expression, b.expression);
        assert_eq!(a.history, b.history);
        assert_eq!(a.combined.chosen, b.combined.chosen);
        assert!(a.history.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.best.is_valid(cfg.max_depth));
        assert!(validate(&c, &a.combined).is_empty());
    }

    #[test]
    fn empty_controller_is_rejected() {
        let c = SymbolicController::new(Grid::integer(&[2]).unwrap(), Grid::integer(&[2]).unwrap()).unwrap();
        assert!(matches!(evolve(&c, &SrConfig::default(), 0), Err(DeterminizeError::EmptyController)));
    }
}
