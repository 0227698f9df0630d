//! The unroll, solve, decide loop.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{conditional_value, decide, CheckError, ConditionalResult, Outcome, SolverConfig, Verdict};
use crate::explorer::{ExplorationConfig, Explorer};
use crate::frontend::{check_property, Program, Property};
use crate::semantics::{CompiledProgram, RewardFn};
use crate::Number;

#[derive(Clone, Debug, Default)]
pub struct BmcConfig {
    pub exploration: ExplorationConfig,
    pub solver: SolverConfig,
    /// Checked between rounds.
    pub timeout: Option<Duration>,
    /// Keep unrolling after a verdict, to record the full convergence curve.
    pub run_to_completion: bool,
}

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationRecord {
    pub round: usize,
    pub states: usize,
    pub transitions: usize,
    pub frontier: usize,
    pub numerator: Number,
    pub denominator: Number,
    pub value: Option<Number>,
    pub exact: bool,
    pub seconds: f64,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "round,states,transitions,frontier,numerator,denominator,value,seconds";

    pub fn csv_row(&self) -> String {
        let value = self.value.as_ref().map_or("undefined".to_string(), |v| format!("{}", v.to_f64()));
        format!(
            "{},{},{},{},{},{},{},{:.6}",
            self.round,
            self.states,
            self.transitions,
            self.frontier,
            self.numerator.to_f64(),
            self.denominator.to_f64(),
            value,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub property: String,
    pub verdict: Verdict,
    pub fully_expanded: bool,
    pub iterations: Vec<IterationRecord>,
    /// Why the loop stopped without a verdict, if it did.
    pub diagnostic: Option<String>,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.iterations.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(IterationRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.iterations {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Checks `prop` on `program` by incremental unrolling.
pub fn bmc(program: &Program, prop: &Property, cfg: &BmcConfig) -> Result<Report, CheckError> {
    bmc_with(program, prop, cfg, |_| {})
}

/// Like [`bmc`], calling `on_round` after every solved round.
pub fn bmc_with<F>(program: &Program, prop: &Property, cfg: &BmcConfig, mut on_round: F) -> Result<Report, CheckError>
where
    F: FnMut(&IterationRecord),
{
    let start = Instant::now();
    check_property(program, prop).map_err(|e| CheckError::Property(e.to_string()))?;
    let compiled = Arc::new(CompiledProgram::new(program)?);
    if compiled.is_parametric() {
        return Err(CheckError::Parametric);
    }
    let reward = RewardFn::for_property(prop, compiled.vars())?;
    let mut explorer = Explorer::new(compiled, cfg.exploration.clone());
    explorer.set_reward_fn(reward)?;

    let mut iterations = Vec::new();
    let mut verdict: Option<Verdict> = None;
    let mut last_value = None;
    let mut diagnostic = None;
    loop {
        if let Some(limit) = cfg.timeout {
            if start.elapsed() >= limit {
                diagnostic = Some(format!("timeout after {:.1}s", start.elapsed().as_secs_f64()));
                break;
            }
        }
        if cfg.exploration.max_rounds.is_some_and(|r| explorer.rounds() >= r) {
            diagnostic = Some("round limit reached".into());
            break;
        }
        let report = explorer.expand()?;
        let m = explorer.model();
        let res: ConditionalResult = match conditional_value(m, prop.mode, &cfg.solver) {
            Ok(r) => r,
            Err(e @ CheckError::SchedulerExplosion { .. }) => {
                diagnostic = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let stats = m.stats();
        let record = IterationRecord {
            round: report.round,
            states: stats.states,
            transitions: stats.transitions,
            frontier: stats.expandable,
            numerator: res.numerator.clone(),
            denominator: res.denominator(),
            value: res.value.clone(),
            exact: res.exact,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::debug!(
            "round {}: {} states, value {:?}",
            record.round,
            record.states,
            record.value.as_ref().map(Number::to_f64)
        );
        on_round(&record);
        iterations.push(record);
        last_value = res.value.clone();

        let v = decide(prop, &res, report.fully_expanded);
        if verdict.is_none() && v.outcome.is_final() {
            verdict = Some(Verdict {
                iteration: report.round,
                ..v
            });
            if !cfg.run_to_completion {
                break;
            }
        }
        if report.fully_expanded {
            break;
        }
        if report.state_limit_reached {
            diagnostic = Some(format!("state limit of {} reached", cfg.exploration.max_states_total));
            break;
        }
        if !res.converged {
            log::warn!("value iteration hit the iteration cap in round {}", report.round);
        }
    }
    let fully_expanded = explorer.is_fully_expanded();
    let verdict = verdict.unwrap_or(Verdict {
        outcome: Outcome::Unknown,
        value: last_value,
        iteration: explorer.rounds(),
    });
    if verdict.outcome.is_final() {
        diagnostic = None;
    }
    Ok(Report {
        property: prop.to_string(),
        verdict,
        fully_expanded,
        iterations,
        diagnostic,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}
