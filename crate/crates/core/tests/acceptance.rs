//! End-to-end acceptance checks on the reference programs. Each criterion
//! prints one `pass`/`FAIL` line; the process fails if any criterion does.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use probe_core::checker::{
    bmc, conditional_value, simulate, BmcConfig, IterationRecord, Report, SimulationConfig, SolverConfig,
};
use probe_core::corpus::{self, CouponVariant};
use probe_core::explorer::{ExplorationConfig, Explorer};
use probe_core::frontend::{parse_program, parse_property, OptMode};
use probe_core::parametric::{eliminate, instantiate, region_scan, Axis, RegionGrid, RegionScanConfig};
use probe_core::scalar::rational_to_f64;
use probe_core::semantics::{CompiledProgram, Configuration, RewardFn};
use probe_core::{Number, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{full_model, q, random_chain, random_valuation};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(src: &str, prop: &str, budget: usize, rounds: Option<usize>, max_states: usize) -> Report {
    let cfg = BmcConfig {
        exploration: ExplorationConfig {
            budget,
            max_rounds: rounds,
            max_states_total: max_states,
            ..ExplorationConfig::default()
        },
        timeout: Some(Duration::from_secs(900)),
        run_to_completion: true,
        ..BmcConfig::default()
    };
    bmc(&parse_program(src).unwrap(), &parse_property(prop).unwrap(), &cfg).unwrap()
}

fn last_value(r: &Report) -> f64 {
    r.last().and_then(|l| l.value.as_ref()).map_or(f64::NAN, Number::to_f64)
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

/// Values computed once and shared by several criteria.
#[derive(Default)]
struct Converged {
    example1_p: f64,
    example1_e: f64,
    coupon: Vec<(String, String, String, f64)>,
    crowds_e: f64,
}

/// Unrolls the parity example until `x` reaches 2; the only terminated run
/// has probability 1/4 and the rejected mass is 1/2.
fn shallow_witness() -> Outcome {
    let start = Instant::now();
    let src = corpus::example1_source();
    let program = CompiledProgram::new(&parse_program(&src).unwrap()).unwrap();
    let x = program.vars().lookup("x").unwrap();
    let reward = RewardFn::for_property(&parse_property("P>=1/2 [true]").unwrap(), program.vars()).unwrap();
    let mut e = Explorer::new(program.into(), ExplorationConfig::default());
    e.set_reward_fn(reward).unwrap();
    e.expand_matching(|m, s| match m.configuration(s) {
        Configuration::Run(r) => r.vals.get(x) < &2.into(),
        _ => true,
    })
    .unwrap();
    let res = conditional_value(e.model(), OptMode::Min, &SolverConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let value = res.value.as_ref().and_then(Number::as_exact).cloned();
    check(
        value == Some(q(1, 2)) && res.numerator.as_exact() == Some(&q(1, 4)) && secs < 1.0,
        format!(
            "value {} = {} / (1 - {}), {} states, {secs:.3} s",
            value.map_or("undefined".into(), |v| v.to_string()),
            res.numerator,
            res.bad_probability,
            e.model().num_states()
        ),
    )
}

/// `E[x | x odd]` for `P(x = k) = 2^-(k+1)`, summed over `k <= depth`.
fn truncated_parity_series(depth: i64) -> Rational {
    let (mut num, mut den) = (q(0, 1), q(0, 1));
    let mut mass = q(1, 2);
    for k in 0..=depth {
        if k % 2 == 1 {
            num += &mass * Rational::from_integer(k.into());
            den += &mass;
        }
        mass /= Rational::from_integer(2.into());
    }
    num / den
}

fn parity_limits(out: &mut Converged) -> Outcome {
    let src = corpus::example1_source();
    let p = run(&src, "P>=0.9 [true]", 64, Some(40), usize::MAX);
    let e = run(&src, "E>=1.5 [x]", 64, Some(40), usize::MAX);
    out.example1_p = last_value(&p);
    out.example1_e = last_value(&e);
    let series = rational_to_f64(&truncated_parity_series(64));
    check(
        out.example1_p >= 0.999 && within(out.example1_e, 5.0 / 3.0, 1e-3) && within(series, 5.0 / 3.0, 1e-12),
        format!(
            "after {} rounds P = {:.6}, E = {:.6} (series oracle {series:.9}, limit 5/3)",
            p.iterations.len(),
            out.example1_p,
            out.example1_e
        ),
    )
}

fn coupon_harmonic(n: i64) -> Rational {
    (1..=n).map(|k| q(n, k)).fold(q(0, 1), |a, b| a + b)
}

fn coupon_expectations(out: &mut Converged) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (variant, table) in [(CouponVariant::Classic, 11.42), (CouponVariant::Plain, 4.13), (CouponVariant::Observe, 2.57)] {
        let b = corpus::coupon(5, variant);
        let start = Instant::now();
        let r = run(&b.source, "E>=0 [numberDraws]", 100_000, None, 1_000_000);
        let secs = start.elapsed().as_secs_f64();
        let v = last_value(&r);
        ok &= within(v, table, 0.01 * table) && secs < 60.0;
        if variant == CouponVariant::Classic {
            let exact = rational_to_f64(&coupon_harmonic(5));
            ok &= within(v, exact, 1e-6);
            detail.push(format!("{} {v:.5} (5 H_5 = {exact:.5}) {secs:.1} s", b.name));
        } else {
            detail.push(format!("{} {v:.5} {secs:.1} s", b.name));
        }
        out.coupon.push((b.name.clone(), b.source.clone(), "E>=0 [numberDraws]".into(), v));
    }
    check(ok, detail.join("; "))
}

fn coupon_probabilities(out: &mut Converged) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (variant, table, tol) in [(CouponVariant::Plain, 0.83, 0.02), (CouponVariant::Observe, 0.99, 0.01)] {
        let b = corpus::coupon(5, variant);
        let prop = "P>=0 [numberDraws <= 5]";
        let r = run(&b.source, prop, 100_000, None, 900_000);
        let v = last_value(&r);
        let states = r.last().map_or(0, |l| l.states);
        ok &= within(v, table, tol) && states <= 1_000_000;
        detail.push(format!("{} {v:.4} at {states} states", b.name));
        out.coupon.push((b.name.clone(), b.source.clone(), prop.into(), v));
    }
    check(ok, detail.join("; "))
}

fn crowds_full_expansion(out: &mut Converged) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (observe, p_ref, e_ref) in [(false, 0.33, 5.61), (true, 0.26, 5.18)] {
        let b = corpus::crowds(100, 60, observe);
        let start = Instant::now();
        let p = run(&b.source, "P>=0 [observeSender > 6]", 1_000_000, None, usize::MAX);
        let e = run(&b.source, "E>=0 [observeSender]", 1_000_000, None, usize::MAX);
        let secs = start.elapsed().as_secs_f64();
        let (pv, ev) = (last_value(&p), last_value(&e));
        ok &= p.fully_expanded && e.fully_expanded;
        ok &= within(pv, p_ref, 0.01) && within(ev, e_ref, 0.05) && secs < 600.0;
        if !observe {
            out.crowds_e = ev;
        }
        detail.push(format!(
            "{} P {pv:.4} E {ev:.4}, {} states, complete {}, {secs:.1} s",
            b.name,
            p.last().map_or(0, |l| l.states),
            p.fully_expanded && e.fully_expanded
        ));
    }
    check(ok, detail.join("; "))
}

fn not_below(later: &Number, earlier: &Number) -> bool {
    match (later.as_exact(), earlier.as_exact()) {
        (Some(a), Some(b)) => a >= b,
        _ => later.to_f64() >= earlier.to_f64() - 1e-12,
    }
}

fn monotone(rows: &[IterationRecord]) -> bool {
    rows.windows(2).all(|w| {
        let value_ok = match (&w[0].value, &w[1].value) {
            (Some(a), Some(b)) => not_below(b, a),
            (None, _) => true,
            (Some(a), None) => a.is_zero(),
        };
        // The denominator is 1 - Pr(bad), so it may only shrink.
        not_below(&w[1].numerator, &w[0].numerator) && not_below(&w[0].denominator, &w[1].denominator) && value_ok
    })
}

fn bounds_grow() -> Outcome {
    let cases = [
        (corpus::example1_source(), "E>=0 [x]", 8, 8),
        (corpus::example1_source(), "P>=0 [true]", 8, 8),
        (corpus::coupon_source(5, CouponVariant::Plain), "E>=0 [numberDraws]", 20_000, 6),
        (corpus::coupon_source(5, CouponVariant::Observe), "P>=0 [numberDraws <= 5]", 20_000, 6),
        (corpus::crowds(100, 100, false).source, "P>=0 [observeSender > 10]", 100_000, 6),
        (corpus::crowds(100, 100, true).source, "E>=0 [observeSender]", 100_000, 6),
    ];
    let mut ok = true;
    let mut rounds = Vec::new();
    for (src, prop, budget, n) in cases {
        let r = run(&src, prop, budget, Some(n), usize::MAX);
        ok &= r.iterations.len() >= 5 && monotone(&r.iterations);
        rounds.push(r.iterations.len().to_string());
    }
    check(ok, format!("numerators, rejection and values monotone over {} rounds", rounds.join("/")))
}

fn simulation_agrees(conv: &Converged) -> Outcome {
    let mut cases = vec![
        ("example1".to_string(), corpus::example1_source(), "P>=0 [true]".to_string(), conv.example1_p),
        ("example1".to_string(), corpus::example1_source(), "E>=0 [x]".to_string(), conv.example1_e),
        ("crowds".to_string(), corpus::crowds(100, 60, false).source, "E>=0 [observeSender]".to_string(), conv.crowds_e),
    ];
    cases.extend(conv.coupon.iter().cloned());
    let cfg = SimulationConfig {
        runs: 1_000_000,
        seed: 2024,
        ..SimulationConfig::default()
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, src, prop, exact) in cases {
        let program = CompiledProgram::new(&parse_program(&src).unwrap()).unwrap();
        let reward = RewardFn::for_property(&parse_property(&prop).unwrap(), program.vars()).unwrap();
        let est = simulate(&program, &reward, &cfg).unwrap();
        let hit = est.covers(exact, 0.0);
        ok &= hit;
        detail.push(format!(
            "{name} {prop} {exact:.4} in [{:.4}, {:.4}]{}",
            est.ci_low.unwrap_or(f64::NAN),
            est.ci_high.unwrap_or(f64::NAN),
            if hit { "" } else { " (miss)" }
        ));
    }
    check(ok, detail.join("; "))
}

fn parametric_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SolverConfig::default();
    let mut mismatches = 0;
    for _ in 0..100 {
        let (src, prop) = random_chain(&mut rng);
        let m = full_model(&src, &prop);
        let u = random_valuation(&mut rng);
        let symbolic = eliminate(&m).unwrap().value_at(&u).unwrap();
        let concrete = conditional_value(&instantiate(&m, &u).unwrap(), OptMode::Min, &cfg).unwrap();
        if symbolic.as_ref() != concrete.value.as_ref().and_then(Number::as_exact) {
            mismatches += 1;
        }
    }

    let budget = ExplorationConfig {
        max_rounds: Some(2),
        ..ExplorationConfig::with_budget(1_000_000)
    };
    let prop = "E>=0 [observeSender]";
    let mut symbolic = common::explorer(&corpus::crowds_parametric(100, 60).source, prop, budget.clone());
    let mut numeric = common::explorer(&corpus::crowds(100, 60, false).source, prop, budget);
    symbolic.run().unwrap();
    numeric.run().unwrap();
    let u = [("f".to_string(), q(4, 5)), ("b".to_string(), q(91, 1000))].into_iter().collect();
    let at = instantiate(symbolic.model(), &u).unwrap();
    let a = conditional_value(&at, OptMode::Min, &cfg).unwrap().value.unwrap().to_f64();
    let b = conditional_value(numeric.model(), OptMode::Min, &cfg).unwrap().value.unwrap().to_f64();
    check(
        mismatches == 0 && within(a, b, 1e-9) && at.num_states() == numeric.model().num_states(),
        format!(
            "{mismatches}/100 random chains differ; crowds at f=4/5, b=91/1000: {a:.12} vs {b:.12} on {} states",
            at.num_states()
        ),
    )
}

fn unsafe_region_grows() -> Outcome {
    let b = corpus::crowds_parametric(100, 60);
    let program = parse_program(&b.source).unwrap();
    let prop = parse_property(&b.queries[0].property).unwrap();
    let axis = |n: &str| Axis::new(n, q(0, 1), q(1, 1), 5).unwrap();
    let cfg = RegionScanConfig {
        exploration: ExplorationConfig::with_budget(400_000),
        solver: SolverConfig::default(),
        iterations: 4,
    };
    let grid = region_scan(&program, &prop, RegionGrid::new(vec![axis("f"), axis("b")]), &cfg).unwrap();
    let sets: Vec<Vec<usize>> = (0..grid.iterations()).map(|i| grid.unsafe_at(i)).collect();
    let nested = sets.windows(2).all(|w| w[0].iter().all(|c| w[1].contains(c)));
    let sizes: Vec<String> = sets.iter().map(|s| s.len().to_string()).collect();
    check(
        sets.len() >= 3 && nested && sets.last().is_some_and(|s| !s.is_empty()),
        format!("unsafe cells per iteration {} of {}", sizes.join(", "), grid.cells.len()),
    )
}

fn main() -> ExitCode {
    let mut conv = Converged::default();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("pass", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {n}. {name}: {detail}");
    };
    report(1, "shallow unrolling witness", shallow_witness());
    report(2, "parity example limits", parity_limits(&mut conv));
    report(3, "coupon expectations", coupon_expectations(&mut conv));
    report(4, "coupon probabilities", coupon_probabilities(&mut conv));
    report(5, "crowds full expansion", crowds_full_expansion(&mut conv));
    report(6, "bounds grow with the unrolling", bounds_grow());
    report(7, "simulation agrees", simulation_agrees(&conv));
    report(8, "parametric consistency", parametric_consistency());
    report(9, "unsafe region grows", unsafe_region_grows());
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
