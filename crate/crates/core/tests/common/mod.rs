#![allow(dead_code)]

use std::fmt::Write as _;
use std::sync::Arc;

use probe_core::explorer::{ExplorationConfig, Explorer};
use probe_core::frontend::{parse_program, parse_property};
use probe_core::model::PartialModel;
use probe_core::parametric::ParamValuation;
use probe_core::semantics::{CompiledProgram, RewardFn};
use probe_core::Rational;
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Explorer for `src` with the reward function of `prop` installed.
pub fn explorer(src: &str, prop: &str, exploration: ExplorationConfig) -> Explorer {
    let program = parse_program(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let prop = parse_property(prop).unwrap();
    let compiled = CompiledProgram::new(&program).unwrap();
    let reward = RewardFn::for_property(&prop, compiled.vars()).unwrap();
    let mut e = Explorer::new(Arc::new(compiled), exploration);
    e.set_reward_fn(reward).unwrap();
    e
}

/// The complete model of a finite-state program.
pub fn full_model(src: &str, prop: &str) -> PartialModel {
    let mut e = explorer(src, prop, ExplorationConfig::with_budget(100_000));
    e.run().unwrap();
    assert!(e.is_fully_expanded(), "not finite-state:\n{src}");
    e.into_model()
}

const WEIGHTS: &[&str] = &["p", "1 - p", "q", "p * q", "1 - p * q", "(1 - q) * p", "1/2", "2/3"];

/// A random parametric Markov chain over `n <= 8` control states, written
/// as a loop over a state variable `s`. Each state either jumps
/// deterministically or branches on a weight over `p` and `q`; a jump to
/// `n + 1` is rejected by the final observation. `y` carries a reward.
/// Also returns a property over `y`.
pub fn random_chain<R: Rng>(rng: &mut R) -> (String, String) {
    let n = rng.gen_range(1..=8);
    let jump = |rng: &mut R| {
        let t = rng.gen_range(0..=n + 1);
        let y = rng.gen_range(0..=3);
        if t == n + 1 {
            format!("s := {n}; r := 1;")
        } else {
            format!("s := {t}; y := {y};")
        }
    };
    let mut src = String::from("int s := 0;\nint r := 0;\nint y := 0;\nwhile (s < ");
    let _ = writeln!(src, "{n}) {{");
    let mut closing = 0;
    for i in 0..n {
        let body = if rng.gen_bool(0.8) {
            let w = WEIGHTS[rng.gen_range(0..WEIGHTS.len())];
            format!("{{ {} }} [{w}] {{ {} }}", jump(rng), jump(rng))
        } else {
            jump(rng)
        };
        if i + 1 < n {
            let _ = write!(src, "if (s = {i}) {{ {body} }} else {{ ");
            closing += 1;
        } else {
            src.push_str(&body);
        }
    }
    src.push_str(&" }".repeat(closing));
    src.push_str("\n}\nobserve(r = 0);\n");
    let prop = if rng.gen_bool(0.5) {
        "E>=0 [y]".to_string()
    } else {
        format!("P>=0 [y >= {}]", rng.gen_range(1..=3))
    };
    (src, prop)
}

/// A valuation of `p` and `q` strictly inside the unit square.
pub fn random_valuation<R: Rng>(rng: &mut R) -> ParamValuation {
    let pick = |rng: &mut R| {
        let d = rng.gen_range(2..=9);
        q(rng.gen_range(1..d), d)
    };
    [("p".to_string(), pick(rng)), ("q".to_string(), pick(rng))].into_iter().collect()
}

/// `src` with the parameters inside probability annotations replaced by
/// the values of `u`.
pub fn substitute(src: &str, u: &ParamValuation) -> String {
    let mut out = String::with_capacity(src.len());
    let mut in_weight = false;
    for c in src.chars() {
        match c {
            '[' => in_weight = true,
            ']' => in_weight = false,
            _ => {}
        }
        match u.get(c.to_string().as_str()) {
            Some(v) if in_weight => {
                let _ = write!(out, "({v})");
            }
            _ => out.push(c),
        }
    }
    out
}
