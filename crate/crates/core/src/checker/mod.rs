//! Conditional values on partial models, verdicts, the bounded model
//! checking loop, and a Monte Carlo cross-check.
//!
//! A conditional value is `ER(◇sink) / (1 - Pr(◇bad))`. Both numerator and
//! `Pr(◇bad)` only grow as a model is unrolled, and so does their quotient
//! on deterministic models; each value is therefore a lower bound on the
//! value of the full program.
//!
//! Under nondeterminism the quotient does not decompose. Without a
//! reachable bad state it is the numerator alone and standard min/max value
//! iteration applies; otherwise all memoryless schedulers are enumerated up
//! to a cap. Only memoryless schedulers are considered.

mod bmc;
mod simulate;
pub mod solve;

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use bmc::{bmc, bmc_with, BmcConfig, IterationRecord, Report};
pub use simulate::{simulate, SimulationConfig, SimulationError, SimulationEstimate};
pub use solve::{solve_chain, solve_chain_with, solve_mdp, value_iteration, Quantity, Solution, SolveOptions};

use crate::frontend::{Comparison, OptMode, Property};
use crate::model::{induced_chain, ChainView, ModelError, PartialModel, Scheduler, StateId, INITIAL_STATE};
use crate::semantics::SemanticsError;
use crate::{Number, Rational};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverConfig {
    /// Models up to this many states are solved over exact rationals.
    pub exact_threshold: usize,
    pub epsilon: f64,
    pub max_iterations: u64,
    /// Maximal number of schedulers enumerated for a quotient.
    pub scheduler_cap: u64,
    /// Cyclic components up to this size are solved directly in floating point.
    pub dense_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            exact_threshold: 50_000,
            epsilon: 1e-10,
            max_iterations: 10_000_000,
            scheduler_cap: 1 << 20,
            dense_limit: 512,
        }
    }
}

impl SolverConfig {
    fn float_options(&self) -> SolveOptions {
        SolveOptions {
            dense_limit: self.dense_limit,
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
        }
    }

    fn use_exact(&self, m: &PartialModel) -> bool {
        m.num_states() <= self.exact_threshold
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum CheckError {
    #[error("the model is parametric; instantiate it first")]
    Parametric,
    #[error("{states} nondeterministic states need 2^{states} schedulers, above the cap of {cap}")]
    SchedulerExplosion { states: usize, cap: u64 },
    #[error("invalid property: {0}")]
    Property(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<SemanticsError> for CheckError {
    fn from(e: SemanticsError) -> Self {
        CheckError::Model(ModelError::Semantics(e))
    }
}

/// `ER(◇sink) / (1 - Pr(◇bad))` on one partial model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalResult {
    pub numerator: Number,
    pub bad_probability: Number,
    /// `None` when the denominator is zero.
    pub value: Option<Number>,
    /// Optimal scheduler, when schedulers were enumerated.
    pub scheduler: Option<Scheduler>,
    pub exact: bool,
    /// False if some value iteration hit the iteration cap.
    pub converged: bool,
}

impl ConditionalResult {
    pub fn denominator(&self) -> Number {
        self.bad_probability.one_minus()
    }

    fn new(numerator: Number, bad_probability: Number, converged: bool) -> Self {
        let denominator = bad_probability.one_minus();
        let undefined = match &denominator {
            Number::Exact(d) => d <= &Rational::from_integer(0.into()),
            // Rounding can leave a residue of a few ulps on a zero denominator.
            Number::Float(d) => *d <= 8.0 * f64::EPSILON,
        };
        let value = (!undefined).then(|| numerator.div(&denominator));
        ConditionalResult {
            exact: numerator.is_exact() && bad_probability.is_exact(),
            numerator,
            bad_probability,
            value,
            scheduler: None,
            converged,
        }
    }
}

/// Orders optional values with `None` (0/0) below every number.
pub fn compare_values(a: &Option<Number>, b: &Option<Number>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
    }
}

fn solve_at(view: &ChainView, q: &Quantity, cfg: &SolverConfig) -> (Number, bool) {
    if cfg.use_exact(view.model()) {
        let sol = solve_chain::<Rational>(view, q, &SolveOptions::exact());
        (Number::Exact(sol.at(INITIAL_STATE)), true)
    } else {
        let sol = solve_chain::<f64>(view, q, &cfg.float_options());
        (Number::Float(sol.at(INITIAL_STATE)), sol.converged)
    }
}

fn solve_mdp_at(m: &PartialModel, q: &Quantity, mode: OptMode, cfg: &SolverConfig) -> (Number, bool) {
    if cfg.use_exact(m) && solve::mdp_is_acyclic(m) {
        let sol = solve_mdp::<Rational>(m, q, mode, &SolveOptions::exact());
        (Number::Exact(sol.at(INITIAL_STATE)), true)
    } else {
        let sol = solve_mdp::<f64>(m, q, mode, &cfg.float_options());
        (Number::Float(sol.at(INITIAL_STATE)), sol.converged)
    }
}

fn ensure_numeric(m: &PartialModel) -> Result<(), CheckError> {
    if m.is_parametric() {
        Err(CheckError::Parametric)
    } else {
        Ok(())
    }
}

/// Probability of reaching `targets` from the initial state, optimized by
/// `mode` when the model is nondeterministic.
pub fn reach_probability(
    m: &PartialModel,
    targets: &[StateId],
    mode: OptMode,
    cfg: &SolverConfig,
) -> Result<Number, CheckError> {
    ensure_numeric(m)?;
    let q = Quantity::Reach(targets);
    Ok(match ChainView::deterministic(m) {
        Ok(view) => solve_at(&view, &q, cfg).0,
        Err(_) => solve_mdp_at(m, &q, mode, cfg).0,
    })
}

/// Expected reward collected before reaching the sink.
pub fn expected_reward_to_sink(m: &PartialModel, mode: OptMode, cfg: &SolverConfig) -> Result<Number, CheckError> {
    ensure_numeric(m)?;
    Ok(match ChainView::deterministic(m) {
        Ok(view) => solve_at(&view, &Quantity::Reward, cfg).0,
        Err(_) => solve_mdp_at(m, &Quantity::Reward, mode, cfg).0,
    })
}

/// Conditional value of a chain view.
pub fn chain_conditional_value(view: &ChainView, cfg: &SolverConfig) -> ConditionalResult {
    let (num, c1) = solve_at(view, &Quantity::Reward, cfg);
    let (bad, c2) = match view.model().bad_state() {
        Some(b) => solve_at(view, &Quantity::Reach(&[b]), cfg),
        None => (Number::zero(), true),
    };
    ConditionalResult::new(num, bad, c1 && c2)
}

/// The optimal conditional value under `mode` on a parameter-free model.
pub fn conditional_value(
    m: &PartialModel,
    mode: OptMode,
    cfg: &SolverConfig,
) -> Result<ConditionalResult, CheckError> {
    ensure_numeric(m)?;
    if let Ok(view) = ChainView::deterministic(m) {
        return Ok(chain_conditional_value(&view, cfg));
    }
    if m.bad_state().is_none() {
        let (num, conv) = solve_mdp_at(m, &Quantity::Reward, mode, cfg);
        return Ok(ConditionalResult::new(num, Number::zero(), conv));
    }
    let states = m.nondet_states();
    let count = 1u64.checked_shl(states.len() as u32).filter(|&c| c <= cfg.scheduler_cap);
    let Some(count) = count else {
        return Err(CheckError::SchedulerExplosion {
            states: states.len(),
            cap: cfg.scheduler_cap,
        });
    };
    let results: Vec<ConditionalResult> = (0..count)
        .into_par_iter()
        .map(|bits| {
            let sched = Scheduler::from_bits(states, bits);
            let view = induced_chain(m, &sched).expect("total scheduler");
            let mut r = chain_conditional_value(&view, cfg);
            r.scheduler = Some(sched);
            r
        })
        .collect();
    let mut best: Option<ConditionalResult> = None;
    for r in results {
        let better = match &best {
            None => true,
            Some(b) => {
                let ord = compare_values(&r.value, &b.value);
                match mode {
                    OptMode::Min => ord == Ordering::Less,
                    OptMode::Max => ord == Ordering::Greater,
                }
            }
        };
        if better {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one scheduler"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Proven,
    Refuted,
    Unknown,
    /// Fully expanded, but the condition has probability zero.
    Undefined,
}

impl Outcome {
    /// Proven and refuted verdicts never change under further unrolling.
    pub fn is_final(self) -> bool {
        matches!(self, Outcome::Proven | Outcome::Refuted | Outcome::Undefined)
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Proven => 0,
            Outcome::Refuted => 1,
            Outcome::Unknown | Outcome::Undefined => 2,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Proven => "proven",
            Outcome::Refuted => "refuted",
            Outcome::Unknown => "unknown",
            Outcome::Undefined => "undefined",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub value: Option<Number>,
    pub iteration: usize,
}

/// Applies the transfer rules: a lower bound meeting a `>=`/`>` threshold
/// proves the property, a lower bound beyond a `<=`/`<` threshold refutes
/// it, and a fully expanded model decides every comparison.
pub fn decide(prop: &Property, res: &ConditionalResult, fully_expanded: bool) -> Verdict {
    let outcome = match &res.value {
        None if fully_expanded => Outcome::Undefined,
        None => Outcome::Unknown,
        Some(v) => {
            let ord = v.cmp_rational(&prop.threshold);
            let holds = match prop.comparison {
                Comparison::Ge => ord != Ordering::Less,
                Comparison::Gt => ord == Ordering::Greater,
                Comparison::Le => ord != Ordering::Greater,
                Comparison::Lt => ord == Ordering::Less,
            };
            if prop.comparison.is_lower_bound() {
                match (holds, fully_expanded) {
                    (true, _) => Outcome::Proven,
                    (false, true) => Outcome::Refuted,
                    (false, false) => Outcome::Unknown,
                }
            } else {
                match (holds, fully_expanded) {
                    (false, _) => Outcome::Refuted,
                    (true, true) => Outcome::Proven,
                    (true, false) => Outcome::Unknown,
                }
            }
        }
    };
    Verdict {
        outcome,
        value: res.value.clone(),
        iteration: 0,
    }
}
