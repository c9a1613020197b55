mod common;

use ctrldet::controller::{parse_ctl, write_ctl, Grid};
use ctrldet::determinize::{self, validate, Algorithm, Options};
use ctrldet::mtbdd::{self, Manager, NodeHandle, TerminalLabel, VariableOrder};
use ctrldet::setcover::{greedy_cover, CoverInstance};
use ctrldet::symreg::{downsample, parse_expressions, Genotype};
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_diagram(seed: u64, max_vars: usize) -> (Manager, NodeHandle, Vec<TerminalLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_vars);
    let alphabet = common::label_alphabet();
    let k = rng.random_range(1..=alphabet.len());
    let labels: Vec<&TerminalLabel> = alphabet.choose_multiple(&mut rng, k).collect();
    let table: Vec<TerminalLabel> = (0..1usize << n).map(|_| (*labels.choose(&mut rng).unwrap()).clone()).collect();
    let mut levels: Vec<u8> = (0..n as u8).collect();
    levels.shuffle(&mut rng);
    let mut m = Manager::new(VariableOrder::from_levels(levels).unwrap());
    let mut entries: Vec<(u64, TerminalLabel)> = table.iter().cloned().enumerate().map(|(c, l)| (c as u64, l)).collect();
    let root = m.build_from_codes(&mut entries, TerminalLabel::NoInput);
    (m, root, table)
}

fn agrees(m: &Manager, root: NodeHandle, table: &[TerminalLabel]) -> bool {
    (0..table.len()).all(|c| m.eval(root, c as u64) == &table[c])
}

fn close(a: f64, b: f64) -> bool {
    if !a.is_finite() || !b.is_finite() {
        return a.is_nan() && b.is_nan() || a == b;
    }
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn construction_order_does_not_matter(seed in any::<u64>()) {
        let (mut m, root, table) = random_diagram(seed, 8);
        let mut entries: Vec<(u64, TerminalLabel)> =
            table.iter().cloned().enumerate().map(|(c, l)| (c as u64, l)).collect();
        entries.reverse();
        prop_assert_eq!(m.build_from_codes(&mut entries, TerminalLabel::NoInput), root);
        prop_assert_eq!(m.reduce(root), root);
        prop_assert!(agrees(&m, root, &table));
    }

    #[test]
    fn sifting_preserves_function_and_never_grows(seed in any::<u64>()) {
        let (m, root, table) = random_diagram(seed, 8);
        let s = m.sift_reorder(root);
        prop_assert!(s.node_count() <= m.node_count(root));
        prop_assert!(agrees(&s.manager, s.root, &table));
    }

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let (m, root, table) = random_diagram(seed, 8);
        let bytes = m.serialize(root);
        prop_assert_eq!(bytes.len(), m.serialized_len(root));
        let (d, droot) = mtbdd::decode(&bytes).unwrap();
        prop_assert_eq!(d.node_count(droot), m.node_count(root));
        prop_assert!(agrees(&d, droot, &table));
        prop_assert_eq!(d.serialize(droot), bytes);
    }

    #[test]
    fn decoding_corrupted_bytes_never_panics(seed in any::<u64>(), edits in prop::collection::vec((any::<usize>(), any::<u8>()), 1..6), cut in any::<usize>()) {
        let (m, root, _) = random_diagram(seed, 6);
        let mut bytes = m.serialize(root);
        for (at, v) in edits {
            let i = at % bytes.len();
            bytes[i] = v;
        }
        bytes.truncate(cut % (bytes.len() + 1));
        if let Ok((d, droot)) = mtbdd::decode(&bytes) {
            prop_assert!(mtbdd::decode(&d.serialize(droot)).is_ok());
        }
    }

    #[test]
    fn ctl_round_trips(seed in any::<u64>()) {
        let c = common::random_controller(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        prop_assert_eq!(parse_ctl(&write_ctl(&c)).unwrap(), c);
    }

    #[test]
    fn index_functions_invert(counts in prop::collection::vec(1u32..40, 1..4), pick in any::<u64>()) {
        let g = Grid::integer(&counts).unwrap();
        let s = pick % g.cell_count();
        let cell = g.unindex_fs(s).unwrap();
        prop_assert_eq!(g.index_fs(&cell).unwrap(), s);
        let b = g.index_fb(&cell).unwrap();
        prop_assert_eq!(g.unindex_fb(b).unwrap(), cell);
        prop_assert_eq!(g.fb_to_fs(b).unwrap(), s);
    }

    #[test]
    fn determinizers_are_feasible_and_repeatable(seed in any::<u64>()) {
        let c = common::random_controller(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        for algo in [Algorithm::La, Algorithm::Ga, Algorithm::Lga, Algorithm::Blga] {
            for permissive in [false, true] {
                let a = determinize::run(algo, &c, Options { permissive }).unwrap();
                prop_assert!(validate(&c, &a).is_empty(), "{} violates", algo);
                let b = determinize::run(algo, &c, Options { permissive }).unwrap();
                prop_assert_eq!(&a.chosen, &b.chosen);
                prop_assert_eq!(a.serialize(), b.serialize());
            }
        }
    }

    #[test]
    fn ga_never_grows_the_diagram(seed in any::<u64>()) {
        let c = common::random_controller(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        let r = determinize::ga(&c).unwrap();
        prop_assert!(r.nodes_after <= r.nodes_before);
    }

    #[test]
    fn greedy_returns_a_cover(sets in prop::collection::vec(prop::collection::vec(1u64..=10, 0..6), 1..8)) {
        let mut family = sets;
        family.push((1..=10).collect());
        let inst = CoverInstance::new(1..=10u64, family);
        let sol = greedy_cover(&inst).unwrap();
        prop_assert!(inst.is_cover(&sol.sets));
    }

    #[test]
    fn printed_expressions_parse_back(seed in any::<u64>(), outputs in 1usize..3, vars in 1usize..4, depth in 4usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Genotype::random(outputs, vars, depth, &mut rng);
        let parsed = parse_expressions(&g.to_string()).unwrap();
        prop_assert_eq!(parsed.len(), outputs);
        let mut out = Vec::new();
        for _ in 0..100 {
            let x: Vec<f64> = (0..vars).map(|_| rng.random_range(-10.0..10.0)).collect();
            g.eval(&x, &mut out);
            for (e, &want) in parsed.iter().zip(&out) {
                prop_assert!(close(e.eval(&x), want), "{} at {:?}: {} vs {}", g, x, e.eval(&x), want);
            }
        }
    }

    #[test]
    fn variation_keeps_trees_valid(seed in any::<u64>(), depth in 4usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Genotype::random(2, 2, depth, &mut rng);
        let mut b = Genotype::random(2, 2, depth, &mut rng);
        for _ in 0..20 {
            a.crossover(&mut b, depth, &mut rng);
            b.mutate(depth, &mut rng);
            prop_assert!(a.is_valid(depth) && b.is_valid(depth));
            prop_assert!(a.trees.iter().chain(&b.trees).all(|t| t.is_derivation(2)));
        }
    }

    #[test]
    fn downsample_is_a_sorted_subset(len in 0usize..200, lambda in 0usize..100, seed in any::<u64>()) {
        let states: Vec<u64> = (0..len as u64).map(|s| 3 * s + 1).collect();
        let d = downsample(&states, lambda, seed);
        prop_assert_eq!(d.len(), len.min(lambda));
        prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(d.iter().all(|s| states.binary_search(s).is_ok()));
    }
}

#[test]
fn downsample_is_roughly_uniform() {
    let states: Vec<u64> = (0..20).collect();
    let (runs, lambda) = (4000, 5);
    let mut counts = [0u32; 20];
    for seed in 0..runs {
        for s in downsample(&states, lambda, seed) {
            counts[s as usize] += 1;
        }
    }
    let expected = (runs as usize * lambda) as f64 / 20.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // Upper 0.1% point of chi-squared with 19 degrees of freedom.
    assert!(chi2 < 43.8, "chi2 = {chi2}, counts {counts:?}");
}
