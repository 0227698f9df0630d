//! The `bench` command: table rows for the benchmark corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use probe_core::checker::{bmc, BmcConfig, Outcome};
use probe_core::corpus::{self, Benchmark, Query};
use probe_core::frontend::{parse_program, parse_property};
use rayon::prelude::*;
use serde::Serialize;

use crate::format::{json, sig2};
use crate::{input, ExploreOpts, Format, InputError, SolverOpts};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory of `.pgcl` programs with `.props` sidecars; the bundled
    /// corpus is used when absent.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Only rows whose program name contains this string.
    #[arg(long)]
    filter: Option<String>,
    #[command(flatten)]
    explore: ExploreOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Per-row timeout; rows that hit it are marked TO.
    #[arg(long, default_value_t = 3600)]
    timeout_secs: u64,
    /// Rows checked concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Keep unrolling after a verdict, reporting converged values.
    #[arg(long)]
    run_to_completion: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Report zero for all timings.
    #[arg(long)]
    no_timing: bool,
    /// Write the bundled corpus into this directory and exit.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Row {
    program: String,
    instance: String,
    property: String,
    states: usize,
    transitions: usize,
    full: bool,
    lambda: f64,
    result: Option<f64>,
    actual: Option<f64>,
    verdict: String,
    seconds: f64,
    timed_out: bool,
}

/// Reads `name_instance.pgcl` files and their `.props` sidecars, where a
/// `// actual v` comment line records the reference value of the next query.
pub fn load_corpus(dir: &Path) -> Result<Vec<Benchmark>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pgcl"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .pgcl programs in {}", dir.display());
    }
    let mut out = Vec::new();
    for f in files {
        let source = fs::read_to_string(&f)?;
        let stem = f.file_stem().unwrap().to_string_lossy().to_string();
        let (name, instance) = match stem.split_once('_') {
            Some((n, i)) => (n.to_string(), i.replace('_', ", ")),
            None => (stem.clone(), "-".to_string()),
        };
        let props_path = f.with_extension("props");
        let mut queries = Vec::new();
        if let Ok(text) = fs::read_to_string(&props_path) {
            let mut actual = None;
            for line in text.lines().map(str::trim) {
                if let Some(v) = line.strip_prefix("// actual") {
                    actual = v.trim().parse().ok();
                } else if !line.is_empty() && !line.starts_with("//") {
                    queries.push(Query {
                        property: line.to_string(),
                        actual: actual.take(),
                    });
                }
            }
        }
        out.push(Benchmark {
            name,
            instance,
            source,
            queries,
        });
    }
    Ok(out)
}

pub fn export(dir: &Path, benchmarks: &[Benchmark]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for b in benchmarks {
        let stem = b.file_stem();
        fs::write(dir.join(format!("{stem}.pgcl")), &b.source)?;
        fs::write(dir.join(format!("{stem}.props")), b.props_file())?;
    }
    Ok(())
}

fn run_row(b: &Benchmark, q: &Query, cfg: &BmcConfig, no_timing: bool) -> Result<Row> {
    let program = parse_program(&b.source).with_context(|| format!("in {}", b.name))?;
    let prop = parse_property(&q.property)?;
    let report = bmc(&program, &prop, cfg)?;
    let last = report.last();
    let timed_out = report.diagnostic.as_deref().is_some_and(|d| d.starts_with("timeout"));
    Ok(Row {
        program: b.name.clone(),
        instance: b.instance.clone(),
        property: q.property.clone(),
        states: last.map_or(0, |l| l.states),
        transitions: last.map_or(0, |l| l.transitions),
        full: report.fully_expanded,
        lambda: probe_core::scalar::rational_to_f64(&prop.threshold),
        result: last.and_then(|l| l.value.as_ref()).map(|v| v.to_f64()),
        actual: q.actual,
        verdict: report.verdict.outcome.to_string(),
        seconds: if no_timing { 0.0 } else { report.wall_clock_seconds },
        timed_out: timed_out && report.verdict.outcome == Outcome::Unknown,
    })
}

fn text_table(rows: &[Row]) -> String {
    let mut s = format!(
        "{:<16} {:<9} {:<32} {:>9} {:>10} {:>5} {:>7} {:>7} {:>7} {:>8} {:>9}\n",
        "program", "instance", "property", "#states", "#trans.", "full?", "lambda", "result", "actual", "verdict", "time"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), sig2);
    for r in rows {
        let time = if r.timed_out { "TO".to_string() } else { format!("{:.2}s", r.seconds) };
        s.push_str(&format!(
            "{:<16} {:<9} {:<32} {:>9} {:>10} {:>5} {:>7} {:>7} {:>7} {:>8} {:>9}\n",
            r.program,
            r.instance,
            r.property,
            r.states,
            r.transitions,
            if r.full { "yes" } else { "no" },
            sig2(r.lambda),
            opt(r.result),
            opt(r.actual),
            r.verdict,
            time
        ));
    }
    s
}

fn csv_table(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn cmd_bench(a: BenchArgs) -> Result<u8, InputError> {
    if let Some(dir) = &a.export {
        input(export(dir, &corpus::all()))?;
        return Ok(0);
    }
    let benchmarks = match &a.corpus {
        Some(dir) => input(load_corpus(dir))?,
        None => corpus::all(),
    };
    let jobs: Vec<(Benchmark, Query)> = benchmarks
        .into_iter()
        .filter(|b| a.filter.as_ref().is_none_or(|f| b.name.contains(f.as_str())))
        .flat_map(|b| b.queries.clone().into_iter().map(move |q| (b.clone(), q)))
        .filter(|(b, _)| parse_program(&b.source).map(|p| p.params.is_empty()).unwrap_or(true))
        .collect();
    if jobs.is_empty() {
        return Err(InputError(anyhow::anyhow!("no benchmark rows selected")));
    }
    let cfg = BmcConfig {
        exploration: a.explore.config(),
        solver: a.solver.config(),
        timeout: Some(Duration::from_secs(a.timeout_secs)),
        run_to_completion: a.run_to_completion,
    };
    let pool = input(
        rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs.max(1))
            .build()
            .map_err(anyhow::Error::from),
    )?;
    let rows: Vec<Row> = input(pool.install(|| {
        jobs.par_iter()
            .map(|(b, q)| run_row(b, q, &cfg, a.no_timing))
            .collect::<Result<Vec<_>>>()
    }))?;
    let out = match a.format {
        Format::Text => text_table(&rows),
        Format::Json => json(&rows),
        Format::Csv => input(csv_table(&rows))?,
    };
    print!("{out}");
    Ok(0)
}
