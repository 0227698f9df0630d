//! Bundled benchmark programs and their reference values.
//!
//! Programs are generated from their instance parameters so that scaled
//! variants (`crowds(100, 100)`, `coupon(7)`, ...) stay consistent with the
//! reference instances.

use std::fmt::Write as _;

/// One query of a benchmark with its known value, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    /// Property text, threshold set to 90% of `actual` where known.
    pub property: String,
    pub actual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub instance: String,
    pub source: String,
    pub queries: Vec<Query>,
}

impl Benchmark {
    /// File stem used when the corpus is written to disk, e.g. `crowds-obs_100_60`.
    pub fn file_stem(&self) -> String {
        if self.instance == "-" {
            return self.name.clone();
        }
        format!("{}_{}", self.name, self.instance.replace(", ", "_"))
    }

    /// Contents of the `.props` sidecar.
    pub fn props_file(&self) -> String {
        let mut s = String::new();
        for q in &self.queries {
            if let Some(a) = q.actual {
                let _ = writeln!(s, "// actual {a}");
            }
            let _ = writeln!(s, "{}", q.property);
        }
        s
    }
}

/// 90% of `actual`, as a short decimal.
fn lambda(actual: f64) -> String {
    let v = 0.9 * actual;
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn lower_query(kind: char, target: &str, actual: Option<f64>) -> Query {
    let threshold = actual.map_or("0".to_string(), lambda);
    Query {
        property: format!("{kind}>={threshold} [{target}]"),
        actual,
    }
}

/// Loop flipping a fair coin until tails, counting heads in `x`; runs
/// with an even count are blocked. `p` tracks the parity of `x`.
pub fn example1_source() -> String {
    "int x := 0;
int c := 0;
int p := 0;

while (c = 0) {
\t{
\t\tx := x + 1;
\t\tp := 1 - p;
\t} [1/2] {
\t\tc := 1;
\t}
}
observe(p = 1);
"
    .to_string()
}

pub fn example1() -> Benchmark {
    Benchmark {
        name: "example1".into(),
        instance: "-".into(),
        source: example1_source(),
        queries: vec![lower_query('P', "true", Some(1.0)), lower_query('E', "x", Some(5.0 / 3.0))],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouponVariant {
    /// Three independent draws per round.
    Plain,
    /// Three draws per round, conditioned on being pairwise distinct.
    Observe,
    /// One draw per round.
    Classic,
}

/// Coupon collector over `n` coupons.
pub fn coupon_source(n: usize, variant: CouponVariant) -> String {
    let draws = if variant == CouponVariant::Classic { 1 } else { 3 };
    let mut s = String::new();
    for i in 0..n {
        let _ = writeln!(s, "int coup{i} := 0;");
    }
    s.push('\n');
    for d in 1..=draws {
        let _ = writeln!(s, "int draw{d} := 0;");
    }
    s.push_str("\nint numberDraws := 0;\n\n");
    let guard: Vec<String> = (0..n).map(|i| format!("!(coup{i} = 1)")).collect();
    let _ = writeln!(s, "while ({}) {{", guard.join(" | "));
    for d in 1..=draws {
        let _ = writeln!(s, "\tdraw{d} := unif(0,{});", n - 1);
    }
    s.push_str("\tnumberDraws := numberDraws + 1;\n");
    if variant == CouponVariant::Observe {
        s.push_str("\n\tobserve (draw1 != draw2 & draw1 != draw3 & draw2 != draw3);\n");
    }
    s.push('\n');
    for i in 0..n {
        let hit: Vec<String> = (1..=draws).map(|d| format!("draw{d} = {i}")).collect();
        let _ = writeln!(s, "\tif ({}) {{\n\t\tcoup{i} := 1;\n\t}}", hit.join(" | "));
    }
    s.push_str("}\n");
    s
}

pub fn coupon(n: usize, variant: CouponVariant) -> Benchmark {
    let (name, p, e) = match (variant, n) {
        (CouponVariant::Plain, 5) => ("coupon", Some(0.83), Some(4.13)),
        (CouponVariant::Observe, 5) => ("coupon-obs", Some(0.99), Some(2.57)),
        (CouponVariant::Classic, 5) => ("coupon-classic", None, Some(137.0 / 12.0)),
        (CouponVariant::Plain, _) => ("coupon", None, None),
        (CouponVariant::Observe, _) => ("coupon-obs", None, None),
        (CouponVariant::Classic, _) => ("coupon-classic", None, None),
    };
    let mut queries = Vec::new();
    if variant != CouponVariant::Classic {
        queries.push(lower_query('P', &format!("numberDraws <= {n}"), p));
    }
    queries.push(lower_query('E', "numberDraws", e));
    Benchmark {
        name: name.into(),
        instance: n.to_string(),
        source: coupon_source(n, variant),
        queries,
    }
}

/// Weights of the crowds model: corruption `b` and forwarding `f`,
/// either numeric literals or parameter names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrowdsWeights {
    pub bad: String,
    pub forward: String,
}

impl Default for CrowdsWeights {
    fn default() -> Self {
        CrowdsWeights {
            bad: "0.091".into(),
            forward: "0.8".into(),
        }
    }
}

impl CrowdsWeights {
    pub fn parametric() -> Self {
        CrowdsWeights {
            bad: "b".into(),
            forward: "f".into(),
        }
    }
}

/// Crowds protocol with `hosts` crowd members and `runs` messages. With
/// `observe`, other hosts must have been observed more than `runs / 4` times.
pub fn crowds_source(hosts: u32, runs: u32, observe: bool, w: &CrowdsWeights) -> String {
    let mut s = format!(
        "int delivered := 0;
int lastSender := 0;
int remainingRuns := {runs};
int observeSender := 0;
int observeOther := 0;

while (remainingRuns > 0) {{
\twhile (delivered = 0) {{
\t\t{{
\t\t\tif (lastSender = 0) {{
\t\t\t\tobserveSender := observeSender + 1;
\t\t\t}} else {{
\t\t\t\tobserveOther := observeOther + 1;
\t\t\t}}
\t\t\tlastSender := 0;
\t\t\tdelivered := 1;
\t\t}} [{bad}] {{
\t\t\t{{
\t\t\t\t{{ lastSender := 0; }} [1/{hosts}] {{ lastSender := 1; }}
\t\t\t}} [{forward}] {{
\t\t\t\tlastSender := 0;
\t\t\t\t// not forwarding: the message is delivered here
\t\t\t\tdelivered := 1;
\t\t\t}}
\t\t}}
\t}}
\t// set up the next run
\tdelivered := 0;
\tremainingRuns := remainingRuns - 1;
}}
",
        bad = w.bad,
        forward = w.forward
    );
    if observe {
        let _ = writeln!(s, "observe(observeOther > {});", runs / 4);
    }
    s
}

pub fn crowds(hosts: u32, runs: u32, observe: bool) -> Benchmark {
    let (p, e) = match (hosts, runs, observe) {
        (100, 60, false) => (Some(0.33), Some(5.61)),
        (100, 60, true) => (Some(0.26), Some(5.18)),
        (100, 80, false) => (Some(0.33), Some(7.47)),
        _ => (None, None),
    };
    Benchmark {
        name: if observe { "crowds-obs" } else { "crowds" }.into(),
        instance: format!("{hosts}, {runs}"),
        source: crowds_source(hosts, runs, observe, &CrowdsWeights::default()),
        queries: vec![
            lower_query('P', &format!("observeSender > {}", runs / 10), p),
            lower_query('E', "observeSender", e),
        ],
    }
}

/// Crowds with symbolic `f` and `b`. The query is the upper-bound form
/// whose violation marks a parameter point unsafe.
pub fn crowds_parametric(hosts: u32, runs: u32) -> Benchmark {
    Benchmark {
        name: "crowds-param".into(),
        instance: format!("{hosts}, {runs}"),
        source: crowds_source(hosts, runs, false, &CrowdsWeights::parametric()),
        queries: vec![Query {
            property: format!("P<=1/2 [observeSender > {}]", runs / 10),
            actual: None,
        }],
    }
}

/// The reference benchmark set.
pub fn all() -> Vec<Benchmark> {
    vec![
        example1(),
        coupon(5, CouponVariant::Plain),
        coupon(5, CouponVariant::Observe),
        coupon(5, CouponVariant::Classic),
        crowds(100, 60, false),
        crowds(100, 60, true),
        crowds(100, 80, false),
        crowds_parametric(100, 60),
    ]
}

/// Looks a benchmark up by name and instance, e.g. `("crowds", "100, 60")`.
pub fn find(name: &str, instance: &str) -> Option<Benchmark> {
    all().into_iter().find(|b| b.name == name && b.instance == instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_property, parse_program, parse_property};

    #[test]
    fn every_benchmark_parses_with_its_queries() {
        for b in all() {
            let p = parse_program(&b.source).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            for q in &b.queries {
                let prop = parse_property(&q.property).unwrap();
                check_property(&p, &prop).unwrap();
            }
        }
    }

    #[test]
    fn thresholds_are_ninety_percent() {
        assert_eq!(lambda(0.83), "0.747");
        assert_eq!(lambda(2.57), "2.313");
        assert_eq!(coupon(5, CouponVariant::Observe).queries[1].property, "E>=2.313 [numberDraws]");
    }

    #[test]
    fn parametric_crowds_differs_only_in_weights() {
        let numeric = crowds_source(100, 60, false, &CrowdsWeights::default());
        let symbolic = crowds_source(100, 60, false, &CrowdsWeights::parametric());
        let diff: Vec<_> = numeric.lines().zip(symbolic.lines()).filter(|(a, b)| a != b).collect();
        assert_eq!(diff.len(), 2);
        let p = parse_program(&symbolic).unwrap();
        let names: Vec<_> = p.params.iter().cloned().collect();
        assert_eq!(names, vec!["b".to_string(), "f".to_string()]);
    }

    #[test]
    fn classic_coupon_has_one_draw() {
        let s = coupon_source(5, CouponVariant::Classic);
        assert!(s.contains("draw1") && !s.contains("draw2"));
    }
}
