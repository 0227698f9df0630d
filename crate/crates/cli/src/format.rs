//! Rendering of reports in the three output formats.

use std::fmt::Write as _;

use probe_core::checker::{Report, SimulationEstimate};
use probe_core::explorer::ExpansionReport;
use probe_core::frontend::Property;
use probe_core::model::PartialModel;
use serde::Serialize;

pub fn json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// `v` rounded to two significant digits.
pub fn sig2(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = 1 - v.abs().log10().floor() as i32;
    if digits > 0 {
        format!("{:.*}", digits as usize, v)
    } else {
        let scale = 10f64.powi(-digits);
        format!("{}", (v / scale).round() * scale)
    }
}

pub fn report_text(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "property  {}", r.property);
    let _ = writeln!(s, "verdict   {} (round {})", r.verdict.outcome, r.verdict.iteration);
    match (&r.verdict.value, r.last()) {
        (Some(v), Some(last)) => {
            let kind = if last.exact { "exact" } else { "approximate" };
            let _ = writeln!(s, "value     {} ({kind}: {v})", sig2(v.to_f64()));
        }
        _ => {
            let _ = writeln!(s, "value     undefined");
        }
    }
    if let Some(last) = r.last() {
        let _ = writeln!(
            s,
            "model     {} states, {} transitions, {} expandable{}",
            last.states,
            last.transitions,
            last.frontier,
            if r.fully_expanded { " (complete)" } else { "" }
        );
    }
    let _ = writeln!(s, "rounds    {}", r.iterations.len());
    if let Some(d) = &r.diagnostic {
        let _ = writeln!(s, "note      {d}");
    }
    let _ = writeln!(s, "time      {:.2} s", r.wall_clock_seconds);
    s
}

#[derive(Serialize)]
pub struct ExploreRow {
    round: usize,
    expanded: usize,
    states: usize,
    transitions: usize,
    #[serde(rename = "fullyExpanded")]
    fully_expanded: bool,
}

pub fn explore_rows(reports: &[ExpansionReport], m: &PartialModel) -> Vec<ExploreRow> {
    let mut states = 2;
    let mut transitions = 0;
    let mut rows: Vec<ExploreRow> = reports
        .iter()
        .map(|r| {
            states += r.new_states;
            transitions += r.new_transitions;
            ExploreRow {
                round: r.round,
                expanded: r.expanded,
                states,
                transitions,
                fully_expanded: r.fully_expanded,
            }
        })
        .collect();
    // Cumulative counts above are indicative; the last row reports the model itself.
    if let Some(last) = rows.last_mut() {
        let st = m.stats();
        last.states = st.states;
        last.transitions = st.transitions;
    }
    rows
}

pub fn explore_csv(reports: &[ExpansionReport]) -> String {
    let mut s = String::from("round,expanded,newStates,newTransitions,fullyExpanded\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.round, r.expanded, r.new_states, r.new_transitions, r.fully_expanded
        );
    }
    s
}

pub fn explore_text(reports: &[ExpansionReport], m: &PartialModel) -> String {
    let st = m.stats();
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(s, "round {:>4}: expanded {:>8}, new states {:>8}", r.round, r.expanded, r.new_states);
    }
    let _ = writeln!(
        s,
        "{} states, {} transitions, {} expandable, {} nondeterministic{}",
        st.states,
        st.transitions,
        st.expandable,
        st.nondeterministic,
        if m.is_fully_expanded() { " (complete)" } else { "" }
    );
    s
}

pub fn simulation_text(prop: &Property, e: &SimulationEstimate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "property  {prop}");
    match (e.mean, e.ci_low, e.ci_high) {
        (Some(m), Some(lo), Some(hi)) => {
            let _ = writeln!(s, "estimate  {m:.6}  (95% CI [{lo:.6}, {hi:.6}])");
        }
        _ => {
            let _ = writeln!(s, "estimate  undefined (every run was rejected)");
        }
    }
    let _ = writeln!(
        s,
        "runs      {} ({} terminated, {} rejected, {} diverged)",
        e.runs, e.terminated, e.rejected, e.diverged
    );
    s
}

pub fn simulation_csv(e: &SimulationEstimate) -> String {
    let f = |v: Option<f64>| v.map_or("undefined".to_string(), |v| v.to_string());
    format!(
        "runs,terminated,rejected,diverged,mean,stdError,ciLow,ciHigh\n{},{},{},{},{},{},{},{}\n",
        e.runs,
        e.terminated,
        e.rejected,
        e.diverged,
        f(e.mean),
        f(e.std_error),
        f(e.ci_low),
        f(e.ci_high)
    )
}

#[cfg(test)]
mod tests {
    use super::sig2;

    #[test]
    fn two_significant_digits() {
        assert_eq!(sig2(0.8312), "0.83");
        assert_eq!(sig2(11.4166), "11");
        assert_eq!(sig2(5.614), "5.6");
        assert_eq!(sig2(877370.0), "880000");
        assert_eq!(sig2(0.0), "0");
    }
}
