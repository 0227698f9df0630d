mod common;

use std::time::Duration;

use probe_core::checker::{bmc, solve_chain, value_iteration, BmcConfig, Quantity, SolveOptions};
use probe_core::explorer::ExplorationConfig;
use probe_core::frontend::{parse_program, parse_program_unchecked, parse_property};
use probe_core::model::ChainView;
use probe_core::parametric::{gcd, Monomial, ParamValuation, Polynomial, RationalFunction};
use probe_core::scalar::rational_to_f64;
use probe_core::{Number, Rational};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{full_model, q, random_chain, random_valuation, substitute};

fn aexpr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![(0u32..20).prop_map(|n| n.to_string()), prop::sample::select(vec!["x", "y", "z"]).prop_map(String::from)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*"]), inner.clone()).prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

fn bexpr() -> impl Strategy<Value = String> {
    let cmp = (aexpr(), prop::sample::select(vec!["=", "!=", "<", "<=", ">", ">="]), aexpr())
        .prop_map(|(a, op, b)| format!("{a} {op} {b}"));
    let leaf = prop_oneof![Just("true".to_string()), Just("false".to_string()), cmp];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["&", "|"]), inner.clone()).prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            inner.prop_map(|a| format!("!({a})")),
        ]
    })
}

fn weight() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["1/2", "0.3", "p", "1 - p", "p * q", "(1 - p) * (1 - q)", "p^2"]).prop_map(String::from)
}

fn stmt() -> impl Strategy<Value = String> {
    let var = prop::sample::select(vec!["x", "y", "z"]);
    let leaf = prop_oneof![
        Just("skip;".to_string()),
        (var.clone(), aexpr()).prop_map(|(v, e)| format!("{v} := {e};")),
        (var, 0u32..3, 3u32..6).prop_map(|(v, lo, hi)| format!("{v} := unif({lo}, {hi});")),
        bexpr().prop_map(|b| format!("observe({b});")),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        let block = prop::collection::vec(inner, 1..3).prop_map(|v| v.join(" "));
        prop_oneof![
            (bexpr(), block.clone(), block.clone()).prop_map(|(c, a, b)| format!("if ({c}) {{ {a} }} else {{ {b} }}")),
            (bexpr(), block.clone()).prop_map(|(c, a)| format!("if ({c}) {{ {a} }}")),
            (block.clone(), weight(), block.clone()).prop_map(|(a, w, b)| format!("{{ {a} }} [{w}] {{ {b} }}")),
            (block.clone(), block.clone()).prop_map(|(a, b)| format!("{{ {a} }} [] {{ {b} }}")),
            (bexpr(), block).prop_map(|(c, a)| format!("while ({c}) {{ {a} }}")),
        ]
    })
}

fn program() -> impl Strategy<Value = String> {
    prop::collection::vec(stmt(), 1..4).prop_map(|body| format!("int x := 0; int y := 1; int z := -2;\n{}", body.join("\n")))
}

fn polynomial() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-5i64..=5, 0u32..3, 0u32..3), 0..4).prop_map(|terms| {
        Polynomial::from_terms(terms.into_iter().map(|(c, ep, eq)| {
            let mono = Monomial::from_factors([("p".to_string(), ep), ("q".to_string(), eq)].into_iter().filter(|f| f.1 > 0));
            (mono, Rational::from_integer(c.into()))
        }))
    })
}

fn valuation() -> impl Strategy<Value = ParamValuation> {
    ((-6i64..=6, 1i64..=5), (-6i64..=6, 1i64..=5))
        .prop_map(|((a, b), (c, d))| [("p".to_string(), q(a, b)), ("q".to_string(), q(c, d))].into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printing_then_parsing_is_the_identity(src in program()) {
        let parsed = parse_program_unchecked(&src).unwrap();
        let printed = parsed.to_string();
        let reparsed = parse_program_unchecked(&printed).unwrap();
        prop_assert_eq!(&reparsed, &parsed, "printed as\n{}", printed);
        prop_assert_eq!(reparsed.to_string(), printed);
    }

    #[test]
    fn polynomial_evaluation_is_a_ring_homomorphism(a in polynomial(), b in polynomial(), u in valuation()) {
        let (ea, eb) = (a.evaluate(&u).unwrap(), b.evaluate(&u).unwrap());
        prop_assert_eq!((&a + &b).evaluate(&u).unwrap(), &ea + &eb);
        prop_assert_eq!((&a - &b).evaluate(&u).unwrap(), &ea - &eb);
        prop_assert_eq!((&a * &b).evaluate(&u).unwrap(), &ea * &eb);
    }

    #[test]
    fn gcd_divides_both_arguments(a in polynomial(), b in polynomial(), c in polynomial()) {
        let (x, y) = (&a * &c, &b * &c);
        let g = gcd(&x, &y);
        if !g.is_zero() {
            prop_assert!(x.div_exact(&g).is_some());
            prop_assert!(y.div_exact(&g).is_some());
        }
    }

    #[test]
    fn rational_function_arithmetic_commutes_with_evaluation(
        a in polynomial(), b in polynomial(), c in polynomial(), d in polynomial(), u in valuation()
    ) {
        prop_assume!(!b.is_zero() && !d.is_zero());
        let (f, g) = (RationalFunction::new(a, b).unwrap(), RationalFunction::new(c, d).unwrap());
        let (ef, eg) = match (f.evaluate(&u), g.evaluate(&u)) {
            (Ok(x), Ok(y)) => (x, y),
            _ => return Ok(()),
        };
        if let Ok(v) = (f.clone() + g.clone()).evaluate(&u) {
            prop_assert_eq!(v, &ef + &eg);
        }
        if let Ok(v) = (f.clone() * g.clone()).evaluate(&u) {
            prop_assert_eq!(v, &ef * &eg);
        }
        if let Ok(h) = f.checked_div(&g) {
            prop_assert_eq!(h * g, f);
        }
    }

    #[test]
    fn value_iteration_stays_below_the_exact_solution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, prop) = random_chain(&mut rng);
        let src = substitute(&src, &random_valuation(&mut rng));
        let m = full_model(&src, &prop);
        let view = ChainView::deterministic(&m).unwrap();
        let mut quantities = vec![Quantity::Reward];
        let bad = m.bad_state().map(|b| [b]);
        if let Some(b) = &bad {
            quantities.push(Quantity::Reach(b));
        }
        for qty in &quantities {
            let exact: Vec<f64> = solve_chain::<Rational>(&view, qty, &SolveOptions::exact()).values.iter().map(rational_to_f64).collect();
            let opts = SolveOptions { dense_limit: 0, epsilon: 1e-12, max_iterations: 200 };
            let mut ok = true;
            let mut prev = vec![0.0; exact.len()];
            value_iteration::<f64>(&view, qty, &opts, |x| {
                for ((v, e), p) in x.iter().zip(&exact).zip(&prev) {
                    ok &= *v <= e + 1e-12 && *v >= p - 1e-12;
                }
                prev = x.to_vec();
            });
            prop_assert!(ok, "{}", src);
        }
    }

    #[test]
    fn bmc_bounds_only_grow(seed in any::<u64>(), budget in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, prop) = random_chain(&mut rng);
        let src = substitute(&src, &random_valuation(&mut rng));
        let cfg = BmcConfig {
            exploration: ExplorationConfig { max_rounds: Some(30), ..ExplorationConfig::with_budget(budget) },
            timeout: Some(Duration::from_secs(60)),
            run_to_completion: true,
            ..BmcConfig::default()
        };
        let report = bmc(&parse_program(&src).unwrap(), &parse_property(&prop).unwrap(), &cfg).unwrap();
        for w in report.iterations.windows(2) {
            let bad = |r: &probe_core::checker::IterationRecord| r.denominator.one_minus();
            prop_assert!(not_below(&w[1].numerator, &w[0].numerator), "{}", src);
            prop_assert!(not_below(&bad(&w[1]), &bad(&w[0])), "{}", src);
            match (&w[0].value, &w[1].value) {
                (Some(a), Some(b)) => prop_assert!(not_below(b, a), "{}", src),
                // Only a zero value can turn out to be undefined.
                (Some(a), None) => prop_assert!(a.is_zero(), "value became undefined\n{}", src),
                _ => {}
            }
        }
    }
}

fn not_below(later: &Number, earlier: &Number) -> bool {
    match (later.as_exact(), earlier.as_exact()) {
        (Some(a), Some(b)) => a >= b,
        _ => later.to_f64() >= earlier.to_f64() - 1e-12,
    }
}
