use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ctrldet::bench::{self, BenchOptions, Family, GenSpec, Law};
use ctrldet::controller::{parse_ctl, write_ctl, Dim, Grid, SymbolicController};
use ctrldet::determinize::{self, validate, validate_diagram, Algorithm, Options};
use ctrldet::mtbdd::{self, Manager};
use ctrldet::symreg::{self, SrConfig};

#[derive(Parser)]
#[command(name = "ctrldet", version, about = "Store and determinize symbolic controllers as decision diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic controller as a .ctl file.
    Gen(GenArgs),
    /// Determinize a controller and write the result as .mtb.
    Determinize(DeterminizeArgs),
    /// Print sizes of a .ctl or .mtb file.
    Stats { file: PathBuf },
    /// Run algorithms over controllers and report compression.
    Bench(BenchArgs),
    /// Check that a .mtb determinizes a .ctl.
    Verify {
        ctl: PathBuf,
        mtb: PathBuf,
        /// Allow inputs on states outside the domain.
        #[arg(long)]
        permissive: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Clustered,
    Planted,
    Uniform,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Cells per state dimension, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    states: Vec<u32>,
    /// Cells per input dimension, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<u32>,
    #[arg(long, default_value_t = 0.8)]
    density: f64,
    #[arg(long, default_value_t = 3)]
    max_set: usize,
    /// Longest run of states sharing a base set (clustered).
    #[arg(long, default_value_t = 8)]
    max_run: u32,
    /// Law matrix rows separated by ';', entries by ',' (planted).
    #[arg(long, allow_hyphen_values = true)]
    law: Option<String>,
    /// Law offsets, comma separated (planted); zero by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    offset: Vec<f64>,
    /// Window radius in input cells (planted).
    #[arg(long, default_value_t = 1)]
    window: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct DeterminizeArgs {
    input: PathBuf,
    #[arg(long, default_value = "lga")]
    algo: Algorithm,
    #[arg(long)]
    permissive: bool,
    /// SR seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SR parameters as key = value lines.
    #[arg(long)]
    sr_config: Option<PathBuf>,
    /// Sift the result before writing it.
    #[arg(long)]
    sift: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(required = true)]
    controllers: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "la,ga,lga,blga")]
    algos: Vec<Algorithm>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    sr_repeats: usize,
    #[arg(long)]
    sr_config: Option<PathBuf>,
    /// First SR seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measure diagrams in their original variable order.
    #[arg(long)]
    no_sift: bool,
    #[arg(long)]
    permissive: bool,
}

fn load_ctl(path: &Path) -> Result<SymbolicController> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_ctl(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_sr_config(path: Option<&Path>) -> Result<SrConfig> {
    match path {
        None => Ok(SrConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SrConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn parse_law(text: &str, offset: &[f64], n: usize, m: usize) -> Result<Law> {
    let coeffs = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad law entry '{v}'")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ensure!(coeffs.len() == m && coeffs.iter().all(|r| r.len() == n), "law must have {m} rows of {n} entries");
    let offset = if offset.is_empty() { vec![0.0; m] } else { offset.to_vec() };
    Ok(Law { coeffs, offset })
}

fn unit_grid(counts: &[u32]) -> Result<Grid> {
    Ok(Grid::new(counts.iter().map(|&c| Dim::new(c, 0.0, 1.0)).collect())?)
}

fn gen(a: GenArgs) -> Result<bool> {
    let state = unit_grid(&a.states)?;
    let input = unit_grid(&a.inputs)?;
    let family = match a.family {
        FamilyArg::Clustered => Family::Clustered { max_run: a.max_run },
        FamilyArg::Uniform => Family::Uniform,
        FamilyArg::Planted => {
            let text = a.law.as_deref().context("--law is required for the planted family")?;
            Family::PlantedLaw {
                law: parse_law(text, &a.offset, a.states.len(), a.inputs.len())?,
                window: a.window,
            }
        }
    };
    let spec = GenSpec {
        state,
        input,
        family,
        density: a.density,
        max_set: a.max_set,
    };
    let ctrl = bench::gen_controller(&spec, a.seed)?;
    fs::write(&a.output, write_ctl(&ctrl)).with_context(|| format!("writing {}", a.output.display()))?;
    println!("{}: {} states, {} pairs", a.output.display(), ctrl.len(), ctrl.pair_count());
    Ok(true)
}

fn determinize_cmd(a: DeterminizeArgs) -> Result<bool> {
    let ctrl = load_ctl(&a.input)?;
    let opts = Options { permissive: a.permissive };
    let result = if a.algo == Algorithm::Sr {
        let cfg = load_sr_config(a.sr_config.as_deref())?;
        let sr = symreg::evolve(&ctrl, &cfg, a.seed)?;
        let expr_path = a.output.with_extension("expr");
        fs::write(&expr_path, format!("{}\n", sr.expression))
            .with_context(|| format!("writing {}", expr_path.display()))?;
        println!(
            "expression fits {} of {} states (sample fitness {:.4})",
            sr.fitted.len(),
            ctrl.len(),
            sr.fitness.value
        );
        sr.combined
    } else {
        determinize::run(a.algo, &ctrl, opts)?
    };
    let violations = validate(&ctrl, &result);
    for v in &violations {
        eprintln!("violation: {v}");
    }
    let (bytes, bytes_before) = if a.sift {
        let s = result.manager.sift_reorder(result.root);
        let mut m = ctrl.state_manager();
        let root = ctrl.encode_mtbdd(&mut m)?;
        (s.manager.serialize(s.root), {
            let sifted = m.sift_reorder(root);
            sifted.manager.serialized_len(sifted.root)
        })
    } else {
        (result.serialize(), result.bytes_before)
    };
    fs::write(&a.output, &bytes).with_context(|| format!("writing {}", a.output.display()))?;
    println!(
        "{}: nodes {} -> {}, bytes {} -> {} ({:.2}%)",
        result.algorithm,
        result.nodes_before,
        result.nodes_after,
        bytes_before,
        bytes.len(),
        bench::compression(bytes_before, bytes.len())
    );
    Ok(violations.is_empty())
}

fn stats(path: &Path) -> Result<bool> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(&mtbdd::MAGIC) {
        let (m, root) = mtbdd::decode(&bytes)?;
        let (decisions, terminals) = m.node_census(root);
        println!("variables: {}", m.var_count());
        println!("order: {}", m.order());
        println!("nodes: {} ({decisions} decision, {terminals} terminal)", decisions + terminals);
        println!("bytes: {}", bytes.len());
        return Ok(true);
    }
    let ctrl = load_ctl(path)?;
    let mut m = ctrl.state_manager();
    let root = ctrl.encode_mtbdd(&mut m)?;
    let mut b = Manager::new(ctrl.relation_order()?);
    let broot = ctrl.encode_bdd(&mut b)?;
    println!("state grid: {}", ctrl.state_grid());
    println!("input grid: {}", ctrl.input_grid());
    println!("domain states: {}", ctrl.len());
    println!("state-input pairs: {}", ctrl.pair_count());
    println!("deterministic: {}", ctrl.is_deterministic());
    println!("mtbdd: {} nodes, {} bytes", m.node_count(root), m.serialized_len(root));
    println!("bdd: {} nodes, {} bytes", b.node_count(broot), b.serialized_len(broot));
    Ok(true)
}

fn bench_cmd(a: BenchArgs) -> Result<bool> {
    let mut controllers = Vec::new();
    for p in &a.controllers {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        controllers.push((name, load_ctl(p)?));
    }
    let opts = BenchOptions {
        options: Options { permissive: a.permissive },
        sr: load_sr_config(a.sr_config.as_deref())?,
        sr_repeats: a.sr_repeats,
        seed: a.seed,
        sift: !a.no_sift,
        out_dir: a.out_dir,
    };
    let report = bench::run_bench(&controllers, &a.algos, &opts);
    match &a.csv {
        Some(p) => report.write_csv(p).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", report.to_csv()),
    }
    for s in report.summary() {
        eprintln!("{:>5}: C = {:.2} % +- {:.2} over {} runs", s.algo, s.mean, s.std, s.runs);
    }
    for f in &report.failures {
        eprintln!("failed: {} {}: {}", f.controller, f.algo, f.message);
    }
    Ok(report.is_clean())
}

fn verify(ctl: &Path, mtb: &Path, permissive: bool) -> Result<bool> {
    let ctrl = load_ctl(ctl)?;
    let bytes = fs::read(mtb).with_context(|| format!("reading {}", mtb.display()))?;
    let (m, root) = mtbdd::decode(&bytes).with_context(|| format!("decoding {}", mtb.display()))?;
    let violations = validate_diagram(&ctrl, &m, root, permissive);
    if violations.is_empty() {
        println!("ok: {} states determinized", ctrl.len());
    }
    for v in &violations {
        println!("violation: {v}");
    }
    Ok(violations.is_empty())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Determinize(a) => determinize_cmd(a),
        Command::Stats { file } => stats(&file),
        Command::Bench(a) => bench_cmd(a),
        Command::Verify { ctl, mtb, permissive } => verify(&ctl, &mtb, permissive),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
