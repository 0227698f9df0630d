//! `probe`: bounded model checking of cpGCL programs from the command line.
//!
//! Exit codes: 0 proven, 1 refuted, 2 unknown (including timeouts and
//! undefined values), 3 input or usage errors.

mod bench;
mod format;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use probe_core::checker::{bmc_with, simulate, BmcConfig, Outcome, Report, SimulationConfig, SolverConfig};
use probe_core::explorer::{ExplorationConfig, Explorer, Heuristic};
use probe_core::frontend::{parse_program, parse_property, parse_property_file, Program, Property};
use probe_core::parametric::{parse_grid, region_scan_with, CellClass, RegionGrid, RegionScanConfig};
use probe_core::semantics::{CompiledProgram, RewardFn};

#[derive(Parser, Debug)]
#[command(name = "probe", version, about = "Bounded model checker for probabilistic programs with conditioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check properties by incremental unrolling.
    Check(CheckArgs),
    /// Unroll a program and report model sizes.
    Explore(ExploreArgs),
    /// Estimate a conditional value by sampling.
    Simulate(SimulateArgs),
    /// Classify a parameter grid of a parametric program.
    Synthesize(SynthesizeArgs),
    /// Run the benchmark corpus.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct ExploreOpts {
    /// States materialized per round.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
    #[arg(long, default_value = "bfs")]
    pub heuristic: Heuristic,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Hard cap on the number of states.
    #[arg(long, default_value_t = 8_000_000)]
    pub max_states: usize,
}

impl ExploreOpts {
    pub fn config(&self) -> ExplorationConfig {
        ExplorationConfig {
            budget: self.budget,
            heuristic: self.heuristic,
            max_rounds: self.max_rounds,
            max_states_total: self.max_states,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverOpts {
    /// Largest model solved over exact rationals.
    #[arg(long, default_value_t = 50_000)]
    pub exact_threshold: usize,
    /// Convergence tolerance of value iteration.
    #[arg(long, default_value_t = 1e-10)]
    pub epsilon: f64,
    /// Largest number of schedulers enumerated for a conditional value.
    #[arg(long, default_value_t = 1 << 20)]
    pub scheduler_cap: u64,
}

impl SolverOpts {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            exact_threshold: self.exact_threshold,
            epsilon: self.epsilon,
            scheduler_cap: self.scheduler_cap,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    program: PathBuf,
    /// A property such as `P>=0.5 [x = 1]`, or a path to a `.props` file.
    #[arg(long)]
    property: String,
    #[command(flatten)]
    explore: ExploreOpts,
    #[command(flatten)]
    solver: SolverOpts,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, default_value_t = 3600)]
    timeout_secs: u64,
    /// Keep unrolling after a verdict.
    #[arg(long)]
    run_to_completion: bool,
    /// Emit one JSON line per round on stderr.
    #[arg(long)]
    progress: bool,
    /// Report zero for all timings, making output reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Also write report.json and iterations.csv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[arg(long)]
    program: PathBuf,
    #[command(flatten)]
    explore: ExploreOpts,
    /// Print the final model.
    #[arg(long)]
    dump: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long)]
    property: String,
    #[arg(long, default_value_t = 100_000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Statements per run before it counts as diverged.
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    #[arg(long)]
    program: PathBuf,
    /// Upper-bound property, e.g. `P<=1/2 [observeSender > 6]`.
    #[arg(long)]
    property: String,
    /// Comma-separated axes `name:lo:hi:steps` or points `name=value`.
    #[arg(long)]
    grid: String,
    /// Unrolling rounds.
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[command(flatten)]
    explore: ExploreOpts,
    #[command(flatten)]
    solver: SolverOpts,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write regions.csv and one SVG heatmap per iteration here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An input problem: reported on stderr with exit code 3.
#[derive(Debug)]
pub struct InputError(pub anyhow::Error);

pub fn input<T>(r: Result<T>) -> std::result::Result<T, InputError> {
    r.map_err(InputError)
}

pub fn read_program(path: &Path) -> Result<Program> {
    let src = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&src).with_context(|| format!("in {}", path.display()))
}

/// A property string, or the properties of a `.props` file if `text` names one.
fn read_properties(text: &str) -> Result<Vec<Property>> {
    let path = Path::new(text);
    if path.extension().is_some_and(|e| e == "props") || path.is_file() {
        let body = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let props = parse_property_file(&body)?;
        if props.is_empty() {
            bail!("{} contains no properties", path.display());
        }
        return Ok(props);
    }
    Ok(vec![parse_property(text)?])
}

fn write_out(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let p = dir.join(name);
    fs::write(&p, body).with_context(|| format!("cannot write {}", p.display()))
}

fn strip_timing(r: &mut Report) {
    r.wall_clock_seconds = 0.0;
    for it in &mut r.iterations {
        it.seconds = 0.0;
    }
}

fn cmd_check(a: CheckArgs) -> std::result::Result<u8, InputError> {
    let program = input(read_program(&a.program))?;
    let props = input(read_properties(&a.property))?;
    let cfg = BmcConfig {
        exploration: a.explore.config(),
        solver: a.solver.config(),
        timeout: Some(Duration::from_secs(a.timeout_secs)),
        run_to_completion: a.run_to_completion,
    };
    let mut reports = Vec::new();
    for prop in &props {
        let progress = a.progress;
        let mut r = input(
            bmc_with(&program, prop, &cfg, |rec| {
                if progress {
                    eprintln!("{}", serde_json::to_string(rec).expect("serializable"));
                }
            })
            .map_err(anyhow::Error::from),
        )?;
        if a.no_timing {
            strip_timing(&mut r);
        }
        reports.push(r);
    }
    let rendered = match a.format {
        Format::Text => reports.iter().map(format::report_text).collect::<Vec<_>>().join("\n"),
        Format::Json if reports.len() == 1 => format::json(&reports[0]),
        Format::Json => format::json(&reports),
        Format::Csv => reports.iter().map(Report::to_csv).collect::<Vec<_>>().join("\n"),
    };
    print!("{rendered}");
    if let Some(dir) = &a.out {
        input(write_out(dir, "report.json", &format::json(&reports)))?;
        let csv: String = reports.iter().map(Report::to_csv).collect::<Vec<_>>().join("\n");
        input(write_out(dir, "iterations.csv", &csv))?;
    }
    let outcomes: Vec<Outcome> = reports.iter().map(|r| r.verdict.outcome).collect();
    Ok(combined_exit(&outcomes))
}

/// Refuted dominates unknown, which dominates proven.
fn combined_exit(outcomes: &[Outcome]) -> u8 {
    outcomes
        .iter()
        .map(|o| match o.exit_code() {
            1 => (2, 1),
            2 => (1, 2),
            _ => (0, 0),
        })
        .max()
        .map_or(0, |(_, code)| code)
}

fn cmd_explore(a: ExploreArgs) -> std::result::Result<u8, InputError> {
    let program = input(read_program(&a.program))?;
    let compiled = Arc::new(input(CompiledProgram::new(&program).map_err(anyhow::Error::from))?);
    let mut ex = Explorer::new(compiled, a.explore.config());
    let reports = input(ex.run().map_err(anyhow::Error::from))?;
    let m = ex.model();
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&format::explore_rows(&reports, m)).unwrap()),
        Format::Csv => print!("{}", format::explore_csv(&reports)),
        Format::Text => print!("{}", format::explore_text(&reports, m)),
    }
    if a.dump {
        print!("{}", m.dump());
    }
    Ok(0)
}

fn cmd_simulate(a: SimulateArgs) -> std::result::Result<u8, InputError> {
    let program = input(read_program(&a.program))?;
    let prop = input(parse_property(&a.property).map_err(anyhow::Error::from))?;
    let compiled = input(CompiledProgram::new(&program).map_err(anyhow::Error::from))?;
    let reward = input(RewardFn::for_property(&prop, compiled.vars()).map_err(anyhow::Error::from))?;
    let cfg = SimulationConfig {
        runs: a.runs,
        seed: a.seed,
        max_steps: a.max_steps,
    };
    let est = input(simulate(&compiled, &reward, &cfg).map_err(anyhow::Error::from))?;
    match a.format {
        Format::Json => println!("{}", format::json(&est)),
        Format::Csv => print!("{}", format::simulation_csv(&est)),
        Format::Text => print!("{}", format::simulation_text(&prop, &est)),
    }
    Ok(0)
}

fn cmd_synthesize(a: SynthesizeArgs) -> std::result::Result<u8, InputError> {
    let program = input(read_program(&a.program))?;
    if program.params.is_empty() {
        return Err(InputError(anyhow::anyhow!(
            "{} has no parameters; use `probe check` instead",
            a.program.display()
        )));
    }
    let prop = input(parse_property(&a.property).map_err(anyhow::Error::from))?;
    let axes = input(parse_grid(&a.grid).map_err(anyhow::Error::msg))?;
    for p in &program.params {
        if !axes.iter().any(|x| &x.name == p) {
            return Err(InputError(anyhow::anyhow!("the grid does not cover parameter {p}")));
        }
    }
    let cfg = RegionScanConfig {
        exploration: a.explore.config(),
        solver: a.solver.config(),
        iterations: a.iterations,
    };
    let text = a.format == Format::Text;
    let grid = input(
        region_scan_with(&program, &prop, RegionGrid::new(axes), &cfg, |round, g| {
            if text {
                let i = g.iterations() - 1;
                println!("iteration {round}: {} unsafe cells", g.unsafe_at(i).len());
            }
        })
        .map_err(anyhow::Error::from),
    )?;
    let growing = (1..grid.iterations()).all(|i| {
        let before = grid.unsafe_at(i - 1);
        let after = grid.unsafe_at(i);
        before.iter().all(|k| after.contains(k))
    });
    if !growing {
        log::warn!("the unsafe region shrank between iterations; values are not monotone at this precision");
    }
    match a.format {
        Format::Text => {
            println!(
                "{} cells: {} unsafe, {} unknown, {} ill-defined",
                grid.cells.len(),
                grid.count(CellClass::Unsafe),
                grid.count(CellClass::Unknown),
                grid.count(CellClass::IllDefined)
            );
            if grid.cells.len() == 1 {
                if let Some(v) = grid.cells[0].history.last().and_then(|h| h.value) {
                    println!("value {v}");
                }
            }
        }
        Format::Csv => print!("{}", grid.to_csv()),
        Format::Json => println!("{}", format::json(&grid)),
    }
    if let Some(dir) = &a.out {
        input(write_out(dir, "regions.csv", &grid.to_csv()))?;
        for i in 0..grid.iterations() {
            if let Some(svg) = grid.to_svg_at(i) {
                input(write_out(dir, &format!("iteration_{}.svg", i + 1), &svg))?;
            }
        }
    }
    Ok(0)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PROBE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("PROBE_THREADS={v} is not a number"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<u8, InputError> {
    input(configure_threads())?;
    match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Bench(a) => bench::cmd_bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
