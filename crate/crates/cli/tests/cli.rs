use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const EXAMPLE: &str = "int x := 0;
int c := 0;
int p := 0;
while (c = 0) {
    { x := x + 1; p := 1 - p; } [1/2] { c := 1; }
}
observe(p = 1);
";

/// A finite chain over one parameter `r`.
const BOUNDED: &str = "int x := 0;
int c := 0;
while (c = 0 & x < 4) {
    { x := x + 1; } [r] { c := 1; }
}
observe(x != 1);
";

fn probe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probe")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn example(dir: &Path) -> String {
    write(dir, "example.pgcl", EXAMPLE).to_string_lossy().into_owned()
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let prog = example(dir.path());
    let proven = probe(&["check", "--program", &prog, "--property", "P>=0.5 [true]", "--budget", "16"]);
    assert_eq!(code(&proven), 0, "{}", stdout(&proven));
    assert!(stdout(&proven).contains("proven"));

    let refuted = probe(&["check", "--program", &prog, "--property", "P<=0.5 [true]", "--budget", "16"]);
    assert_eq!(code(&refuted), 1);

    let unknown = probe(&["check", "--program", &prog, "--property", "E>=2 [x]", "--budget", "8", "--max-rounds", "3"]);
    assert_eq!(code(&unknown), 2);
    assert!(stdout(&unknown).contains("round limit"));
}

#[test]
fn refuted_dominates_in_a_property_file() {
    let dir = tempfile::tempdir().unwrap();
    let prog = example(dir.path());
    let props = write(dir.path(), "example.props", "// two queries\nP>=0.5 [true]\nP<=0.5 [true]\n");
    let o = probe(&["check", "--program", &prog, "--property", props.to_str().unwrap(), "--budget", "16"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn input_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let prog = example(dir.path());
    let bad_prop = probe(&["check", "--program", &prog, "--property", "P>= [true"]);
    assert_eq!(code(&bad_prop), 3);
    assert!(!bad_prop.stderr.is_empty());

    let unknown_var = probe(&["check", "--program", &prog, "--property", "P>=0.5 [y = 1]"]);
    assert_eq!(code(&unknown_var), 3);

    let missing = probe(&["check", "--program", "/nonexistent.pgcl", "--property", "P>=0.5 [true]"]);
    assert_eq!(code(&missing), 3);

    let syntax = write(dir.path(), "broken.pgcl", "int x := 0; x := ;");
    let o = probe(&["check", "--program", syntax.to_str().unwrap(), "--property", "P>=0.5 [true]"]);
    assert_eq!(code(&o), 3);

    assert_eq!(code(&probe(&["check", "--no-such-flag"])), 3);
}

#[test]
fn synthesize_rejects_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let prog = example(dir.path());
    let plain = probe(&["synthesize", "--program", &prog, "--property", "P<=1/2 [true]", "--grid", "r:0:1:2"]);
    assert_eq!(code(&plain), 3);

    let param = write(dir.path(), "bounded.pgcl", BOUNDED);
    let param = param.to_str().unwrap();
    let reversed = probe(&["synthesize", "--program", param, "--property", "P<=1/2 [x = 4]", "--grid", "r:1:0:2"]);
    assert_eq!(code(&reversed), 3);
    let uncovered = probe(&["synthesize", "--program", param, "--property", "P<=1/2 [x = 4]", "--grid", "s:0:1:2"]);
    assert_eq!(code(&uncovered), 3);
    let lower = probe(&["synthesize", "--program", param, "--property", "P>=1/2 [x = 4]", "--grid", "r:0:1:2"]);
    assert_eq!(code(&lower), 3);
}

#[test]
fn single_point_grid_matches_check() {
    let dir = tempfile::tempdir().unwrap();
    let param = write(dir.path(), "bounded.pgcl", BOUNDED);
    let fixed = write(dir.path(), "fixed.pgcl", &BOUNDED.replace("[r]", "[2/3]"));
    let synth = probe(&[
        "synthesize", "--program", param.to_str().unwrap(), "--property", "P<=1/2 [x = 4]", "--grid", "r=2/3",
        "--iterations", "1",
    ]);
    assert_eq!(code(&synth), 0, "{}", String::from_utf8_lossy(&synth.stderr));
    let text = stdout(&synth);
    let v: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("value "))
        .expect("a value line")
        .trim()
        .parse()
        .unwrap();

    let check = probe(&["check", "--program", fixed.to_str().unwrap(), "--property", "P<=1/2 [x = 4]", "--format", "json"]);
    let report: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
    let w = report["iterations"].as_array().unwrap().last().unwrap()["value"].as_f64().unwrap();
    assert!((v - w).abs() < 1e-12, "{v} vs {w}");
    // P(x = 4 | x != 1) with r = 2/3: (2/3)^4 / (1 - (2/3)(1/3))
    assert!((w - (16.0 / 81.0) / (7.0 / 9.0)).abs() < 1e-12);
}

#[test]
fn synthesize_writes_regions_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    // A second, inert parameter gives the grid two axes for the heatmap.
    let two = BOUNDED.replace("{ c := 1; }", "{ { c := 1; } [s] { c := 1; } }");
    let param = write(dir.path(), "bounded.pgcl", &two);
    let out = dir.path().join("out");
    let o = probe(&[
        "synthesize", "--program", param.to_str().unwrap(), "--property", "P<=1/10 [x = 4]", "--grid", "r:0:1:4,s:0:1:2",
        "--budget", "24", "--iterations", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("regions.csv")).unwrap();
    assert!(csv.starts_with("r,s,iteration,value,class"));
    assert!(csv.contains("unsafe"));
    assert!(out.join("iteration_1.svg").exists());
}

#[test]
fn no_timing_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let prog = example(dir.path());
    let args = ["check", "--program", &prog, "--property", "E>=1 [x]", "--budget", "16", "--max-rounds", "5", "--run-to-completion", "--format", "json", "--no-timing"];
    let a = probe(&args);
    let b = probe(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("\"wallClockSeconds\": 0.0"));
}

#[test]
fn simulation_is_seeded_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let prog = example(dir.path());
    let args = ["simulate", "--program", &prog, "--property", "E>=1 [x]", "--runs", "20000", "--seed", "5", "--format", "csv"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_probe"))
            .args(args)
            .env("PROBE_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, run("3").stdout);
    assert_ne!(one.stdout, probe(&["simulate", "--program", &prog, "--property", "E>=1 [x]", "--runs", "20000", "--seed", "6", "--format", "csv"]).stdout);
}

#[test]
fn check_out_directory_holds_report_and_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let prog = example(dir.path());
    let out = dir.path().join("report");
    let o = probe(&["check", "--program", &prog, "--property", "P>=0.5 [true]", "--budget", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("iterations.csv")).unwrap();
    assert!(csv.starts_with("round,states,transitions,frontier,numerator,denominator,value,seconds"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json[0]["verdict"]["outcome"], "proven");
}

#[test]
fn explore_reports_a_complete_model() {
    let dir = tempfile::tempdir().unwrap();
    let fixed = write(dir.path(), "fixed.pgcl", &BOUNDED.replace("[r]", "[1/2]"));
    let o = probe(&["explore", "--program", fixed.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().last().unwrap()["fullyExpanded"], true);
}

#[test]
fn bench_runs_a_corpus_directory() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "example.pgcl", EXAMPLE);
    write(dir.path(), "example.props", "// actual 1\nP>=0.9 [true]\n// actual 1.6667\nE>=1.5 [x]\n");
    let o = probe(&["bench", "--corpus", dir.path().to_str().unwrap(), "--budget", "64", "--format", "csv", "--no-timing"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rows = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = rows.headers().unwrap().clone();
    let verdict = headers.iter().position(|h| h == "verdict").unwrap();
    let actual = headers.iter().position(|h| h == "actual").unwrap();
    let rows: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| &r[verdict] == "proven"));
    assert_eq!(&rows[1][actual], "1.6667");

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(code(&probe(&["bench", "--corpus", empty.path().to_str().unwrap()])), 3);
}

#[test]
fn shipped_corpus_matches_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&probe(&["bench", "--export", dir.path().to_str().unwrap()])), 0);
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 16);
    for n in names {
        let generated = fs::read_to_string(dir.path().join(&n)).unwrap();
        let on_disk = fs::read_to_string(shipped.join(&n)).unwrap_or_default();
        assert_eq!(generated, on_disk, "{n:?} is stale; regenerate with `probe bench --export corpus`");
    }
}
