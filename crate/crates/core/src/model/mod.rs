//! The explored fragment of the operational MDP.
//!
//! States are interned configurations with dense ids: the initial state is
//! 0 and the unique sink is 1. Expandable states and the sink store no
//! transitions; both carry an implicit probability-one self-loop.

pub mod graph;
mod scheduler;

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::hash::BuildHasherDefault;
use std::sync::Arc;

use indexmap::IndexSet;
use num_traits::{One, Signed, Zero};
use rustc_hash::FxHasher;
use serde::Serialize;
use thiserror::Error;

pub use scheduler::{induced_chain, ChainView, Row, Scheduler};

use crate::parametric::RationalFunction;
use crate::scalar::rational_to_f64;
use crate::semantics::{
    Action, CompiledProgram, Configuration, RewardFn, SemanticsError, StepResult, Weight,
};
use crate::Rational;

pub type StateId = u32;

pub const INITIAL_STATE: StateId = 0;
pub const SINK_STATE: StateId = 1;
/// Weight id of the constant 1.
pub const WEIGHT_ONE: u32 = 0;

type FxIndexSet<T> = IndexSet<T, BuildHasherDefault<FxHasher>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateClass {
    Expandable,
    Internal,
    Term,
    Bad,
    Sink,
}

impl fmt::Display for StateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateClass::Expandable => "expandable",
            StateClass::Internal => "internal",
            StateClass::Term => "term",
            StateClass::Bad => "bad",
            StateClass::Sink => "sink",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("state {0} is already materialized")]
    AlreadyMaterialized(StateId),
    #[error("scheduler has no action for nondeterministic state {0}")]
    PartialScheduler(StateId),
    #[error("action {action} is not enabled in state {state}")]
    DisabledAction { state: StateId, action: Action },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// One distinct transition weight with its cached numeric forms.
#[derive(Clone, Debug)]
pub struct WeightEntry {
    pub function: RationalFunction,
    /// `Some` iff the weight is parameter-free.
    pub exact: Option<Rational>,
    /// NaN for parametric weights.
    pub float: f64,
}

impl WeightEntry {
    pub fn new(function: RationalFunction) -> Self {
        let exact = function.constant_value();
        let float = exact.as_ref().map(rational_to_f64).unwrap_or(f64::NAN);
        WeightEntry {
            function,
            exact,
            float,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Choice {
    pub action: Action,
    start: u32,
    end: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub states: usize,
    pub transitions: usize,
    pub expandable: usize,
    pub nondeterministic: usize,
}

/// Def.-5 style partial operational MDP.
#[derive(Clone)]
pub struct PartialModel {
    program: Arc<CompiledProgram>,
    configs: FxIndexSet<Configuration>,
    class: Vec<StateClass>,
    /// Per state: range into `choices`, empty for expandable states and the sink.
    choice_range: Vec<(u32, u32)>,
    choices: Vec<Choice>,
    edges: Vec<(u32, StateId)>,
    weights: Vec<WeightEntry>,
    weight_index: HashMap<Weight, u32>,
    bad: Option<StateId>,
    reward_fn: Option<RewardFn>,
    rewards: HashMap<StateId, Rational>,
    term_states: Vec<StateId>,
    nondet: Vec<StateId>,
    expandable: usize,
}

impl PartialModel {
    /// Model containing the initial configuration (expandable) and the sink.
    pub fn new(program: Arc<CompiledProgram>) -> Self {
        let mut m = PartialModel {
            configs: FxIndexSet::default(),
            class: Vec::new(),
            choice_range: Vec::new(),
            choices: Vec::new(),
            edges: Vec::new(),
            weights: vec![WeightEntry::new(RationalFunction::one())],
            weight_index: HashMap::from([(Weight::One, WEIGHT_ONE)]),
            bad: None,
            reward_fn: None,
            rewards: HashMap::new(),
            term_states: Vec::new(),
            nondet: Vec::new(),
            expandable: 0,
            program,
        };
        let init = m.program.initial_configuration();
        m.intern(init);
        let (sink, _) = m.intern(Configuration::Sink);
        debug_assert_eq!(sink, SINK_STATE);
        m
    }

    pub fn program(&self) -> &Arc<CompiledProgram> {
        &self.program
    }

    pub fn num_states(&self) -> usize {
        self.class.len()
    }

    pub fn stats(&self) -> ModelStats {
        ModelStats {
            states: self.num_states(),
            transitions: self.edges.len() + 1 + self.expandable,
            expandable: self.expandable,
            nondeterministic: self.nondet.len(),
        }
    }

    pub fn is_parametric(&self) -> bool {
        self.weights.iter().any(|w| w.exact.is_none())
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.expandable == 0
    }

    pub fn num_expandable(&self) -> usize {
        self.expandable
    }

    /// Returns the id of `c`, creating an expandable state if it is new.
    pub fn intern(&mut self, c: Configuration) -> (StateId, bool) {
        let is_bad = matches!(c, Configuration::Bad);
        let is_sink = matches!(c, Configuration::Sink);
        let (idx, fresh) = self.configs.insert_full(c);
        let id = idx as StateId;
        if fresh {
            if is_sink {
                self.class.push(StateClass::Sink);
            } else {
                self.class.push(StateClass::Expandable);
                self.expandable += 1;
            }
            self.choice_range.push((0, 0));
            if is_bad {
                self.bad = Some(id);
            }
        }
        (id, fresh)
    }

    pub fn lookup(&self, c: &Configuration) -> Option<StateId> {
        self.configs.get_index_of(c).map(|i| i as StateId)
    }

    pub fn configuration(&self, s: StateId) -> &Configuration {
        self.configs.get_index(s as usize).expect("valid state id")
    }

    pub fn class(&self, s: StateId) -> StateClass {
        self.class[s as usize]
    }

    pub fn classes(&self) -> &[StateClass] {
        &self.class
    }

    pub fn bad_state(&self) -> Option<StateId> {
        self.bad
    }

    pub fn term_states(&self) -> &[StateId] {
        &self.term_states
    }

    /// States with two enabled actions, in materialization order.
    pub fn nondet_states(&self) -> &[StateId] {
        &self.nondet
    }

    fn weight_id(&mut self, w: Weight) -> u32 {
        if let Some(&id) = self.weight_index.get(&w) {
            return id;
        }
        let id = self.weights.len() as u32;
        self.weights.push(WeightEntry::new(self.program.weight(w)));
        self.weight_index.insert(w, id);
        id
    }

    pub fn weights(&self) -> &[WeightEntry] {
        &self.weights
    }

    pub fn weight(&self, id: u32) -> &WeightEntry {
        &self.weights[id as usize]
    }

    /// Replaces the weight table, keeping the graph. Used by instantiation.
    pub(crate) fn with_weights(&self, weights: Vec<WeightEntry>) -> PartialModel {
        assert_eq!(weights.len(), self.weights.len());
        let mut m = self.clone();
        m.weights = weights;
        m
    }

    /// Replaces an expandable state's self-loop by its SOS successors.
    pub fn materialize(&mut self, s: StateId, result: StepResult) -> Result<Vec<StateId>, ModelError> {
        if self.class(s) != StateClass::Expandable {
            return Err(ModelError::AlreadyMaterialized(s));
        }
        let class = match self.configuration(s) {
            Configuration::Run(_) => StateClass::Internal,
            Configuration::Term(_) => StateClass::Term,
            Configuration::Bad => StateClass::Bad,
            Configuration::Sink => unreachable!("sink is never expandable"),
        };
        if class == StateClass::Term {
            if let Some(f) = &self.reward_fn {
                let r = self.program.reward(self.configuration(s), f)?;
                if !r.is_zero() {
                    self.rewards.insert(s, r);
                }
            }
            self.term_states.push(s);
        }
        let mut fresh = Vec::new();
        let first_choice = self.choices.len() as u32;
        if result.is_nondeterministic() {
            self.nondet.push(s);
        }
        for (action, dist) in result.choices {
            let start = self.edges.len() as u32;
            for (w, target) in dist {
                let wid = self.weight_id(w);
                let (t, new) = self.intern(target);
                if new {
                    fresh.push(t);
                }
                self.edges.push((wid, t));
            }
            let end = self.edges.len() as u32;
            self.choices.push(Choice { action, start, end });
        }
        self.choice_range[s as usize] = (first_choice, self.choices.len() as u32);
        self.class[s as usize] = class;
        self.expandable -= 1;
        Ok(fresh)
    }

    /// Steps and materializes `s`.
    pub fn expand_state(&mut self, s: StateId) -> Result<Vec<StateId>, ModelError> {
        let result = self.program.step(self.configuration(s))?;
        self.materialize(s, result)
    }

    /// Stored choices; empty for expandable states and the sink.
    pub fn choices(&self, s: StateId) -> &[Choice] {
        let (a, b) = self.choice_range[s as usize];
        &self.choices[a as usize..b as usize]
    }

    pub fn edges(&self, c: &Choice) -> &[(u32, StateId)] {
        &self.edges[c.start as usize..c.end as usize]
    }

    /// Whether `s` only loops on itself (expandable, sink, or a materialized
    /// self-loop such as `abort`).
    pub fn is_absorbing(&self, s: StateId) -> bool {
        let cs = self.choices(s);
        cs.is_empty()
            || cs
                .iter()
                .all(|c| self.edges(c).iter().all(|&(_, t)| t == s))
    }

    /// Sets the post-expectation and recomputes all terminal rewards.
    pub fn set_reward_fn(&mut self, f: RewardFn) -> Result<(), ModelError> {
        let mut rewards = HashMap::new();
        for &s in &self.term_states {
            let r = self.program.reward(self.configuration(s), &f)?;
            if !r.is_zero() {
                rewards.insert(s, r);
            }
        }
        self.rewards = rewards;
        self.reward_fn = Some(f);
        Ok(())
    }

    pub fn reward_fn(&self) -> Option<&RewardFn> {
        self.reward_fn.as_ref()
    }

    pub fn reward(&self, s: StateId) -> Rational {
        self.rewards.get(&s).cloned().unwrap_or_else(Rational::zero)
    }

    /// States with nonzero reward.
    pub fn rewarded(&self) -> impl Iterator<Item = (StateId, &Rational)> {
        self.rewards.iter().map(|(&s, r)| (s, r))
    }

    pub fn describe(&self, s: StateId) -> String {
        self.program.describe(self.configuration(s))
    }

    /// Line-oriented text dump, ordered by state id.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in 0..self.num_states() as StateId {
            let _ = writeln!(out, "STATE {} {} {}", s, self.class(s), self.reward(s));
        }
        for s in 0..self.num_states() as StateId {
            let cs = self.choices(s);
            if cs.is_empty() {
                let _ = writeln!(out, "TRANS {} none (1 {})", s, s);
                continue;
            }
            for c in cs {
                let _ = write!(out, "TRANS {} {}", s, c.action);
                for &(w, t) in self.edges(c) {
                    let _ = write!(out, " ({} {})", self.weights[w as usize].function, t);
                }
                out.push('\n');
            }
        }
        out
    }

    /// Checks the structural invariants; returns the first violation.
    pub fn audit(&self) -> Result<(), String> {
        let sinks = self.class.iter().filter(|&&c| c == StateClass::Sink).count();
        if sinks != 1 || self.class(SINK_STATE) != StateClass::Sink {
            return Err(format!("expected exactly one sink, found {}", sinks));
        }
        let bads = self.class.iter().enumerate().filter(|(i, _)| {
            matches!(self.configuration(*i as StateId), Configuration::Bad)
        });
        if bads.count() > 1 {
            return Err("more than one bad state".into());
        }
        let parametric = self.is_parametric();
        for s in 0..self.num_states() as StateId {
            let cs = self.choices(s);
            let kind_ok = match (self.class(s), self.configuration(s)) {
                (StateClass::Expandable | StateClass::Sink, _) => cs.is_empty(),
                (StateClass::Term, Configuration::Term(_)) | (StateClass::Bad, Configuration::Bad) => {
                    cs.len() == 1
                        && self.edges(&cs[0]) == [(WEIGHT_ONE, SINK_STATE)]
                }
                (StateClass::Internal, Configuration::Run(_)) => !cs.is_empty(),
                _ => false,
            };
            if !kind_ok {
                return Err(format!("state {} ({}) is malformed", s, self.class(s)));
            }
            if cs.len() > 1 {
                let actions: Vec<_> = cs.iter().map(|c| c.action).collect();
                if actions != [Action::Left, Action::Right] {
                    return Err(format!("state {} has actions {:?}", s, actions));
                }
            }
            if !parametric {
                for c in cs {
                    let total = self
                        .edges(c)
                        .iter()
                        .map(|&(w, _)| self.weights[w as usize].exact.clone().unwrap())
                        .fold(Rational::zero(), |a, b| a + b);
                    if !total.is_one() {
                        return Err(format!("distribution of state {} sums to {}", s, total));
                    }
                }
            }
            let r = self.reward(s);
            if r.is_negative() || (!r.is_zero() && self.class(s) != StateClass::Term) {
                return Err(format!("state {} has reward {}", s, r));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PartialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialModel")
            .field("stats", &self.stats())
            .finish_non_exhaustive()
    }
}
