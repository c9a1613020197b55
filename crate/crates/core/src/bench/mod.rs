//! Compression benchmarks over sets of controllers.

pub mod gen;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::controller::SymbolicController;
use crate::determinize::{self, validate, Algorithm, DeterminizationResult, Options};
use crate::mtbdd::{Manager, NodeHandle};
use crate::symreg::{self, SrConfig};

pub use gen::{gen_controller, BadSpec, Family, GenSpec, Law};

/// CSV header of [`BenchReport::to_csv`].
pub const CSV_HEADER: [&str; 9] = [
    "controller",
    "algo",
    "seed",
    "nodes_before",
    "nodes_after",
    "bytes_before",
    "bytes_after",
    "C",
    "seconds",
];

/// Size reduction in percent, `(1 - after / before) * 100`.
pub fn compression(before: usize, after: usize) -> f64 {
    assert!(before > 0, "original size must be positive");
    (before as f64 - after as f64) * 100.0 / before as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub controller: String,
    pub algo: Algorithm,
    /// SR seed; `None` for the deterministic algorithms.
    pub seed: Option<u64>,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub bytes_before: usize,
    pub bytes_after: usize,
    pub compression: f64,
    pub seconds: f64,
}

impl Row {
    fn record(&self) -> [String; 9] {
        [
            self.controller.clone(),
            self.algo.to_string(),
            self.seed.map_or(String::new(), |s| s.to_string()),
            self.nodes_before.to_string(),
            self.nodes_after.to_string(),
            self.bytes_before.to_string(),
            self.bytes_after.to_string(),
            self.compression.to_string(),
            self.seconds.to_string(),
        ]
    }
}

/// A cell that did not produce a valid row.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub controller: String,
    pub algo: Algorithm,
    pub seed: Option<u64>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgoSummary {
    pub algo: Algorithm,
    pub runs: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
}

impl BenchReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.record()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_csv())
    }

    /// Mean and deviation of the compression per algorithm, in
    /// [`Algorithm::ALL`] order.
    pub fn summary(&self) -> Vec<AlgoSummary> {
        Algorithm::ALL
            .into_iter()
            .filter_map(|algo| {
                let c: Vec<f64> = self.rows.iter().filter(|r| r.algo == algo).map(|r| r.compression).collect();
                if c.is_empty() {
                    return None;
                }
                let n = c.len() as f64;
                let mean = c.iter().sum::<f64>() / n;
                let std = if c.len() > 1 {
                    (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                Some(AlgoSummary {
                    algo,
                    runs: c.len(),
                    mean,
                    std,
                })
            })
            .collect()
    }

    /// Mean compression of `algo` on `controller`, over repetitions.
    pub fn compression_of(&self, controller: &str, algo: Algorithm) -> Option<f64> {
        let c: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.controller == controller && r.algo == algo)
            .map(|r| r.compression)
            .collect();
        (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64)
    }

    /// `C(a) - C(b)` on `controller`.
    pub fn delta(&self, controller: &str, a: Algorithm, b: Algorithm) -> Option<f64> {
        Some(self.compression_of(controller, a)? - self.compression_of(controller, b)?)
    }

    /// Algorithms by decreasing compression on `controller`.
    pub fn ranking(&self, controller: &str) -> Vec<Algorithm> {
        let mut algos: Vec<(Algorithm, f64)> = Algorithm::ALL
            .into_iter()
            .filter_map(|a| Some((a, self.compression_of(controller, a)?)))
            .collect();
        algos.sort_by(|x, y| y.1.total_cmp(&x.1));
        algos.into_iter().map(|(a, _)| a).collect()
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub options: Options,
    pub sr: SrConfig,
    pub sr_repeats: usize,
    /// First SR seed; repetition `r` uses `seed + r`.
    pub seed: u64,
    /// Sift diagrams before measuring them.
    pub sift: bool,
    /// Where `.mtb` files are written; sizes are then read back from disk.
    pub out_dir: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            options: Options::default(),
            sr: SrConfig::default(),
            sr_repeats: 5,
            seed: 0,
            sift: true,
            out_dir: None,
        }
    }
}

/// Bytes of the diagram as stored: sifted first if requested, and written
/// to `file` when given, in which case the on-disk length is returned.
fn stored(m: &Manager, root: NodeHandle, sift: bool, file: Option<&Path>) -> io::Result<(usize, usize)> {
    let (nodes, bytes) = if sift {
        let s = m.sift_reorder(root);
        (s.node_count(), s.manager.serialize(s.root))
    } else {
        (m.node_count(root), m.serialize(root))
    };
    match file {
        Some(path) => {
            fs::write(path, &bytes)?;
            Ok((nodes, fs::metadata(path)?.len() as usize))
        }
        None => Ok((nodes, bytes.len())),
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn run_one(
    name: &str,
    ctrl: &SymbolicController,
    algo: Algorithm,
    seed: Option<u64>,
    opts: &BenchOptions,
) -> Result<(DeterminizationResult, f64), String> {
    let start = Instant::now();
    let result = match (algo, seed) {
        (Algorithm::Sr, Some(s)) => symreg::evolve(ctrl, &opts.sr, s).map(|r| r.combined),
        _ => determinize::run(algo, ctrl, opts.options),
    };
    let seconds = start.elapsed().as_secs_f64();
    let result = result.map_err(|e| e.to_string())?;
    let violations = validate(ctrl, &result);
    if let Some(v) = violations.first() {
        return Err(format!("{name}: {} violations, first: {v}", violations.len()));
    }
    Ok((result, seconds))
}

/// Runs every algorithm on every controller.
///
/// Each result is validated before it is reported; failing cells are
/// recorded and the run continues. SR cells are repeated
/// `opts.sr_repeats` times. Controllers run in parallel.
pub fn run_bench(controllers: &[(String, SymbolicController)], algorithms: &[Algorithm], opts: &BenchOptions) -> BenchReport {
    if let Some(dir) = &opts.out_dir {
        if let Err(e) = fs::create_dir_all(dir) {
            return BenchReport {
                rows: Vec::new(),
                failures: vec![Failure {
                    controller: String::new(),
                    algo: algorithms.first().copied().unwrap_or(Algorithm::La),
                    seed: None,
                    message: format!("{}: {e}", dir.display()),
                }],
            };
        }
    }
    let parts: Vec<BenchReport> = controllers
        .par_iter()
        .map(|(name, ctrl)| bench_controller(name, ctrl, algorithms, opts))
        .collect();
    let mut report = BenchReport::default();
    for p in parts {
        report.rows.extend(p.rows);
        report.failures.extend(p.failures);
    }
    report
}

fn bench_controller(name: &str, ctrl: &SymbolicController, algorithms: &[Algorithm], opts: &BenchOptions) -> BenchReport {
    let mut report = BenchReport::default();
    let stem = file_stem(name);
    let path = |suffix: &str| opts.out_dir.as_ref().map(|d| d.join(format!("{stem}{suffix}.mtb")));
    let fail = |report: &mut BenchReport, algo, seed, message: String| {
        report.failures.push(Failure {
            controller: name.to_string(),
            algo,
            seed,
            message,
        })
    };

    let mut m = ctrl.state_manager();
    let before = match ctrl.encode_mtbdd(&mut m) {
        Ok(r) => r,
        Err(e) => {
            for &a in algorithms {
                fail(&mut report, a, None, e.to_string());
            }
            return report;
        }
    };
    let (nodes_before, bytes_before) = match stored(&m, before, opts.sift, path("").as_deref()) {
        Ok(x) => x,
        Err(e) => {
            for &a in algorithms {
                fail(&mut report, a, None, e.to_string());
            }
            return report;
        }
    };

    let mut cells: Vec<(Algorithm, Option<u64>)> = Vec::new();
    for &a in algorithms {
        if a == Algorithm::Sr {
            cells.extend((0..opts.sr_repeats as u64).map(|r| (a, Some(opts.seed + r))));
        } else {
            cells.push((a, None));
        }
    }
    for (algo, seed) in cells {
        let (result, seconds) = match run_one(name, ctrl, algo, seed, opts) {
            Ok(x) => x,
            Err(e) => {
                fail(&mut report, algo, seed, e);
                continue;
            }
        };
        let suffix = match seed {
            Some(s) => format!(".{algo}.{s}"),
            None => format!(".{algo}"),
        };
        match stored(&result.manager, result.root, opts.sift, path(&suffix).as_deref()) {
            Ok((nodes_after, bytes_after)) => report.rows.push(Row {
                controller: name.to_string(),
                algo,
                seed,
                nodes_before,
                nodes_after,
                bytes_before,
                bytes_after,
                compression: compression(bytes_before, bytes_after),
                seconds,
            }),
            Err(e) => fail(&mut report, algo, seed, e.to_string()),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Grid;

    #[test]
    fn compression_values() {
        assert_eq!(compression(1000, 1000), 0.0);
        assert_eq!(compression(1000, 150), 85.0);
        assert_eq!(compression(100, 150), -50.0);
    }

    fn small() -> SymbolicController {
        SymbolicController::from_entries(
            Grid::integer(&[8]).unwrap(),
            Grid::integer(&[4]).unwrap(),
            [(0, vec![0, 1]), (1, vec![1, 2]), (2, vec![1]), (5, vec![2, 3]), (6, vec![3]), (7, vec![0, 3])],
        )
        .unwrap()
    }

    #[test]
    fn one_controller_four_algorithms() {
        let algos = [Algorithm::La, Algorithm::Ga, Algorithm::Lga, Algorithm::Blga];
        let report = run_bench(&[("small".into(), small())], &algos, &BenchOptions::default());
        assert!(report.is_clean(), "{:?}", report.failures);
        assert_eq!(report.rows.len(), 4);
        let summary = report.summary();
        assert_eq!(summary.len(), 4);
        assert!(summary.iter().all(|s| s.runs == 1 && s.std == 0.0));
        let csv = report.to_csv();
        assert!(csv.starts_with("controller,algo,seed,nodes_before,nodes_after,bytes_before,bytes_after,C,seconds\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn sizes_match_files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let opts = BenchOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..BenchOptions::default()
        };
        let report = run_bench(&[("a/b".into(), small())], &[Algorithm::Lga, Algorithm::Ga], &opts);
        assert!(report.is_clean());
        for r in &report.rows {
            let before = fs::metadata(dir.path().join("a_b.mtb")).unwrap().len() as usize;
            let after = fs::metadata(dir.path().join(format!("a_b.{}.mtb", r.algo))).unwrap().len() as usize;
            assert_eq!((r.bytes_before, r.bytes_after), (before, after));
        }
    }

    #[test]
    fn failures_are_recorded_and_the_run_continues() {
        let empty = SymbolicController::new(Grid::integer(&[4]).unwrap(), Grid::integer(&[2]).unwrap()).unwrap();
        let report = run_bench(
            &[("empty".into(), empty), ("small".into(), small())],
            &[Algorithm::La],
            &BenchOptions::default(),
        );
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].controller, "empty");
        assert_eq!(report.rows.len(), 1);
    }

    #[test]
    fn sr_rows_carry_seeds() {
        let opts = BenchOptions {
            sr: SrConfig {
                generations: 2,
                population: 4,
                es_generations: 2,
                ..SrConfig::default()
            },
            sr_repeats: 3,
            seed: 10,
            ..BenchOptions::default()
        };
        let report = run_bench(&[("small".into(), small())], &[Algorithm::Sr], &opts);
        assert!(report.is_clean(), "{:?}", report.failures);
        let seeds: Vec<Option<u64>> = report.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![Some(10), Some(11), Some(12)]);
    }

    #[test]
    fn delta_and_ranking() {
        let row = |algo, after| Row {
            controller: "x".into(),
            algo,
            seed: None,
            nodes_before: 0,
            nodes_after: 0,
            bytes_before: 200,
            bytes_after: after,
            compression: compression(200, after),
            seconds: 0.0,
        };
        let report = BenchReport {
            rows: vec![row(Algorithm::La, 150), row(Algorithm::Lga, 50), row(Algorithm::Ga, 100)],
            failures: vec![],
        };
        assert_eq!(report.delta("x", Algorithm::Lga, Algorithm::La), Some(50.0));
        assert_eq!(report.ranking("x"), vec![Algorithm::Lga, Algorithm::Ga, Algorithm::La]);
    }
}
