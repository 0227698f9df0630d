//! Budgeted, incremental unrolling of the operational semantics.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::graph::model_sccs;
use crate::model::{ModelError, PartialModel, StateClass, StateId, INITIAL_STATE};
use crate::scalar::Scalar;
use crate::semantics::{CompiledProgram, RewardFn, StepResult};

/// States stepped in parallel before being interned in order.
const BATCH: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    /// Insertion-order queue.
    Bfs,
    /// Largest upper bound on reachability mass first, ties by smallest id.
    MaxProb,
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bfs" => Ok(Heuristic::Bfs),
            "maxprob" => Ok(Heuristic::MaxProb),
            other => Err(format!("unknown heuristic {other:?} (expected bfs or maxprob)")),
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Heuristic::Bfs => "bfs",
            Heuristic::MaxProb => "maxprob",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplorationConfig {
    /// States materialized per round.
    pub budget: usize,
    pub heuristic: Heuristic,
    pub max_rounds: Option<usize>,
    pub max_states_total: usize,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            budget: 1_000_000,
            heuristic: Heuristic::Bfs,
            max_rounds: None,
            max_states_total: 8_000_000,
        }
    }
}

impl ExplorationConfig {
    pub fn with_budget(budget: usize) -> Self {
        ExplorationConfig {
            budget: budget.max(1),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExpansionReport {
    pub round: usize,
    pub expanded: usize,
    pub new_states: usize,
    pub new_transitions: usize,
    pub fully_expanded: bool,
    /// The round stopped because `max_states_total` was hit.
    pub state_limit_reached: bool,
}

/// One JSON progress line.
#[derive(Clone, Debug, Serialize)]
pub struct ProgressEvent {
    pub round: usize,
    pub states: usize,
    pub transitions: usize,
    pub frontier: usize,
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, Reverse<StateId>);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

type ProgressSink = Box<dyn FnMut(&ProgressEvent) + Send>;

/// Owns a partial model and grows it round by round.
pub struct Explorer {
    model: PartialModel,
    config: ExplorationConfig,
    queue: VecDeque<StateId>,
    round: usize,
    progress: Option<ProgressSink>,
}

impl Explorer {
    pub fn new(program: Arc<CompiledProgram>, config: ExplorationConfig) -> Self {
        let model = PartialModel::new(program);
        Explorer {
            queue: VecDeque::from([INITIAL_STATE]),
            model,
            config,
            round: 0,
            progress: None,
        }
    }

    pub fn model(&self) -> &PartialModel {
        &self.model
    }

    pub fn into_model(self) -> PartialModel {
        self.model
    }

    pub fn config(&self) -> &ExplorationConfig {
        &self.config
    }

    pub fn rounds(&self) -> usize {
        self.round
    }

    pub fn set_reward_fn(&mut self, f: RewardFn) -> Result<(), ModelError> {
        self.model.set_reward_fn(f)
    }

    /// Receives one event after each round.
    pub fn set_progress(&mut self, sink: ProgressSink) {
        self.progress = Some(sink);
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.model.is_fully_expanded()
    }

    /// Runs one round: materializes up to `budget` expandable states.
    pub fn expand(&mut self) -> Result<ExpansionReport, ModelError> {
        let before = self.model.stats();
        self.round += 1;
        let heuristic = if self.model.is_parametric() {
            Heuristic::Bfs
        } else {
            self.config.heuristic
        };
        let (expanded, limited) = match heuristic {
            Heuristic::Bfs => self.expand_bfs()?,
            Heuristic::MaxProb => self.expand_max_prob()?,
        };
        let after = self.model.stats();
        let report = ExpansionReport {
            round: self.round,
            expanded,
            new_states: after.states - before.states,
            new_transitions: after.transitions.saturating_sub(before.transitions),
            fully_expanded: self.model.is_fully_expanded(),
            state_limit_reached: limited,
        };
        log::debug!(
            "round {}: {} states, {} expandable",
            self.round,
            after.states,
            after.expandable
        );
        if let Some(sink) = self.progress.as_mut() {
            sink(&ProgressEvent {
                round: self.round,
                states: after.states,
                transitions: after.transitions,
                frontier: after.expandable,
            });
        }
        Ok(report)
    }

    fn at_state_limit(&self) -> bool {
        self.model.num_states() >= self.config.max_states_total
    }

    fn expand_bfs(&mut self) -> Result<(usize, bool), ModelError> {
        let mut expanded = 0;
        let mut batch = Vec::with_capacity(BATCH);
        while expanded < self.config.budget {
            if self.at_state_limit() {
                return Ok((expanded, true));
            }
            batch.clear();
            while batch.len() < BATCH && expanded + batch.len() < self.config.budget {
                match self.queue.pop_front() {
                    Some(s) if self.model.class(s) == StateClass::Expandable => batch.push(s),
                    Some(_) => {}
                    None => break,
                }
            }
            if batch.is_empty() {
                break;
            }
            let results = self.step_batch(&batch)?;
            for (&s, r) in batch.iter().zip(results) {
                let fresh = self.model.materialize(s, r)?;
                self.queue.extend(fresh);
            }
            expanded += batch.len();
        }
        Ok((expanded, false))
    }

    fn step_batch(&self, batch: &[StateId]) -> Result<Vec<StepResult>, ModelError> {
        let model = &self.model;
        let program = model.program();
        let step = |&s: &StateId| program.step(model.configuration(s));
        let results: Result<Vec<_>, _> = if batch.len() >= 64 {
            batch.par_iter().map(step).collect()
        } else {
            batch.iter().map(step).collect()
        };
        Ok(results?)
    }

    fn expand_max_prob(&mut self) -> Result<(usize, bool), ModelError> {
        let mass = path_mass_upper_bounds::<f64>(&self.model);
        let mut heap: BinaryHeap<Key> = self
            .model
            .classes()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == StateClass::Expandable)
            .map(|(s, _)| Key(mass[s], Reverse(s as StateId)))
            .collect();
        let mut expanded = 0;
        while expanded < self.config.budget {
            if self.at_state_limit() {
                return Ok((expanded, true));
            }
            let Some(Key(m, Reverse(s))) = heap.pop() else { break };
            if self.model.class(s) != StateClass::Expandable {
                continue;
            }
            let fresh = self.model.expand_state(s)?;
            expanded += 1;
            if fresh.is_empty() {
                continue;
            }
            // Children inherit the parent's mass scaled by the edge weight.
            let mut child_mass = vec![0.0; fresh.len()];
            for c in self.model.choices(s) {
                for &(w, t) in self.model.edges(c) {
                    if let Some(i) = fresh.iter().position(|&f| f == t) {
                        child_mass[i] += m * self.model.weight(w).float;
                    }
                }
            }
            for (t, cm) in fresh.iter().zip(child_mass) {
                heap.push(Key(cm.min(1.0), Reverse(*t)));
            }
        }
        // Keep the BFS queue in sync for a later heuristic switch.
        self.queue = self
            .model
            .classes()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == StateClass::Expandable)
            .map(|(s, _)| s as StateId)
            .collect();
        Ok((expanded, false))
    }

    /// Rounds until fully expanded, `max_rounds`, or the state limit.
    pub fn run(&mut self) -> Result<Vec<ExpansionReport>, ModelError> {
        let mut reports = Vec::new();
        loop {
            if self.is_fully_expanded() {
                break;
            }
            if let Some(max) = self.config.max_rounds {
                if self.round >= max {
                    break;
                }
            }
            let r = self.expand()?;
            let stop = r.state_limit_reached || r.expanded == 0;
            reports.push(r);
            if stop {
                break;
            }
        }
        Ok(reports)
    }

    /// Materializes expandable states accepted by `keep` until none remain,
    /// in breadth-first order. Returns the number of states materialized.
    pub fn expand_matching<F>(&mut self, mut keep: F) -> Result<usize, ModelError>
    where
        F: FnMut(&PartialModel, StateId) -> bool,
    {
        let mut expanded = 0;
        let mut skipped = VecDeque::new();
        while let Some(s) = self.queue.pop_front() {
            if self.model.class(s) != StateClass::Expandable {
                continue;
            }
            if !keep(&self.model, s) {
                skipped.push_back(s);
                continue;
            }
            let fresh = self.model.expand_state(s)?;
            self.queue.extend(fresh);
            expanded += 1;
        }
        self.queue = skipped;
        Ok(expanded)
    }
}

/// Upper bound on the maximal (over schedulers) probability of reaching each
/// state from the initial state in the current partial model, clamped to
/// `[0, 1]`. All actions of a nondeterministic state contribute their mass.
pub fn path_mass_upper_bounds<T: Scalar>(m: &PartialModel) -> Vec<T> {
    let n = m.num_states();
    let one = T::one();
    let weights: Vec<T> = m
        .weights()
        .iter()
        .map(|w| w.exact.as_ref().map(T::from_rational).unwrap_or_else(T::one))
        .collect();
    let mut inflow = vec![T::zero(); n];
    inflow[INITIAL_STATE as usize] = T::one();
    let mut mass = vec![T::zero(); n];
    let clamp = |v: T| T::min_of(v, T::one());
    let sccs = model_sccs(m);
    for comp in sccs.iter().rev() {
        if comp.len() == 1 {
            let s = comp[0];
            let mut loop_w = T::zero();
            for c in m.choices(s) {
                for &(w, t) in m.edges(c) {
                    if t == s {
                        loop_w = loop_w + weights[w as usize].clone();
                    }
                }
            }
            let v = if loop_w < one {
                inflow[s as usize].clone() / (one.clone() - loop_w)
            } else {
                inflow[s as usize].clone()
            };
            mass[s as usize] = clamp(v);
            push_out(m, s, &weights, &mass, &mut inflow, |t| t != s);
            continue;
        }
        // Cyclic component: iterate the forward equations from the
        // external inflow until stable.
        let local: std::collections::HashMap<StateId, usize> =
            comp.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let external: Vec<T> = comp.iter().map(|&s| inflow[s as usize].clone()).collect();
        for _ in 0..10_000 {
            let mut acc = external.clone();
            for &p in comp {
                for c in m.choices(p) {
                    for &(w, t) in m.edges(c) {
                        if let Some(&i) = local.get(&t) {
                            acc[i] = acc[i].clone() + mass[p as usize].clone() * weights[w as usize].clone();
                        }
                    }
                }
            }
            let mut change = 0.0f64;
            for (&s, v) in comp.iter().zip(acc) {
                let v = clamp(v);
                change = change.max(v.distance(&mass[s as usize]));
                mass[s as usize] = v;
            }
            if change < 1e-12 {
                break;
            }
        }
        for &s in comp {
            push_out(m, s, &weights, &mass, &mut inflow, |t| !local.contains_key(&t));
        }
    }
    mass
}

fn push_out<T: Scalar>(
    m: &PartialModel,
    s: StateId,
    weights: &[T],
    mass: &[T],
    inflow: &mut [T],
    outside: impl Fn(StateId) -> bool,
) {
    for c in m.choices(s) {
        for &(w, t) in m.edges(c) {
            if outside(t) {
                inflow[t as usize] =
                    inflow[t as usize].clone() + mass[s as usize].clone() * weights[w as usize].clone();
            }
        }
    }
}

/// [`path_mass_upper_bounds`] at a single state.
pub fn path_mass_upper_bound<T: Scalar>(m: &PartialModel, s: StateId) -> T {
    path_mass_upper_bounds::<T>(m)[s as usize].clone()
}
