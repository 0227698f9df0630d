use std::collections::BTreeMap;

use serde::Serialize;

use super::{ModelError, PartialModel, StateId};
use crate::semantics::Action;

/// Memoryless deterministic resolution of nondeterministic choices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Scheduler {
    choices: BTreeMap<StateId, Action>,
}

impl Scheduler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Picks `action` everywhere.
    pub fn constant(model: &PartialModel, action: Action) -> Self {
        Scheduler {
            choices: model.nondet_states().iter().map(|&s| (s, action)).collect(),
        }
    }

    /// Bit `i` of `bits` selects `right` at the `i`-th nondeterministic state.
    pub fn from_bits(states: &[StateId], bits: u64) -> Self {
        Scheduler {
            choices: states
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let a = if bits >> i & 1 == 1 { Action::Right } else { Action::Left };
                    (s, a)
                })
                .collect(),
        }
    }

    pub fn set(&mut self, s: StateId, a: Action) {
        self.choices.insert(s, a);
    }

    pub fn get(&self, s: StateId) -> Option<Action> {
        self.choices.get(&s).copied()
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, Action)> + '_ {
        self.choices.iter().map(|(&s, &a)| (s, a))
    }
}

/// Outgoing transitions of one state in a [`ChainView`].
#[derive(Clone, Copy, Debug)]
pub enum Row<'a> {
    /// Implicit probability-one self-loop.
    Absorbing,
    Edges(&'a [(u32, StateId)]),
}

/// A partial model with its nondeterminism resolved.
#[derive(Clone, Copy, Debug)]
pub struct ChainView<'a> {
    model: &'a PartialModel,
    scheduler: Option<&'a Scheduler>,
}

impl<'a> ChainView<'a> {
    /// View of a model without nondeterministic states.
    pub fn deterministic(model: &'a PartialModel) -> Result<Self, ModelError> {
        match model.nondet_states().first() {
            Some(&s) => Err(ModelError::PartialScheduler(s)),
            None => Ok(ChainView {
                model,
                scheduler: None,
            }),
        }
    }

    pub fn model(&self) -> &'a PartialModel {
        self.model
    }

    pub fn num_states(&self) -> usize {
        self.model.num_states()
    }

    pub fn row(&self, s: StateId) -> Row<'a> {
        let cs = self.model.choices(s);
        let choice = match cs.len() {
            0 => return Row::Absorbing,
            1 => &cs[0],
            _ => {
                let a = self
                    .scheduler
                    .and_then(|sch| sch.get(s))
                    .expect("induced_chain checked totality");
                cs.iter().find(|c| c.action == a).expect("enabled action")
            }
        };
        Row::Edges(self.model.edges(choice))
    }
}

/// The Markov chain induced by `scheduler`.
pub fn induced_chain<'a>(
    model: &'a PartialModel,
    scheduler: &'a Scheduler,
) -> Result<ChainView<'a>, ModelError> {
    for &s in model.nondet_states() {
        let a = scheduler.get(s).ok_or(ModelError::PartialScheduler(s))?;
        if !model.choices(s).iter().any(|c| c.action == a) {
            return Err(ModelError::DisabledAction { state: s, action: a });
        }
    }
    Ok(ChainView {
        model,
        scheduler: Some(scheduler),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::frontend::parse_program;
    use crate::model::StateClass;
    use crate::semantics::CompiledProgram;

    fn full_model(src: &str) -> PartialModel {
        let p = CompiledProgram::new(&parse_program(src).unwrap()).unwrap();
        let mut m = PartialModel::new(Arc::new(p));
        let mut s = 0;
        while s < m.num_states() {
            if m.class(s as StateId) == StateClass::Expandable {
                m.expand_state(s as StateId).unwrap();
            }
            s += 1;
        }
        m
    }

    fn reachable(view: &ChainView) -> Vec<StateId> {
        let mut seen = vec![false; view.num_states()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            if let Row::Edges(es) = view.row(s) {
                for &(_, t) in es {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        stack.push(t);
                    }
                }
            }
        }
        (0..view.num_states() as StateId).filter(|&s| seen[s as usize]).collect()
    }

    #[test]
    fn deterministic_view_is_identity() {
        let m = full_model("int x := 0; { x := 1; } [1/2] { x := 2; }");
        let v = ChainView::deterministic(&m).unwrap();
        let empty = Scheduler::new();
        let via_empty = induced_chain(&m, &empty).unwrap();
        for s in 0..m.num_states() as StateId {
            match (v.row(s), via_empty.row(s)) {
                (Row::Edges(a), Row::Edges(b)) => assert_eq!(a, b),
                (Row::Absorbing, Row::Absorbing) => {}
                _ => panic!("rows differ at {}", s),
            }
        }
    }

    #[test]
    fn scheduler_selects_branch() {
        let m = full_model("int x := 0; { x := 1; } [] { x := 2; }");
        let left = Scheduler::constant(&m, Action::Left);
        let v = induced_chain(&m, &left).unwrap();
        let s = m.nondet_states()[0];
        let Row::Edges(es) = v.row(s) else { panic!() };
        let Row::Edges(expected) = ChainView { model: &m, scheduler: None }.row_of_action(s, Action::Left) else { panic!() };
        assert_eq!(es, expected);
        assert!(matches!(
            induced_chain(&m, &Scheduler::new()),
            Err(ModelError::PartialScheduler(_))
        ));
    }

    #[test]
    fn initial_nondeterminism_gives_distinct_chains() {
        let m = full_model("int a := 0; int b := 0; { a := 1; } [] { a := 2; } { b := 1; } [1/2] { b := 2; }");
        assert_eq!(m.nondet_states().len(), 1);
        let l = Scheduler::constant(&m, Action::Left);
        let r = Scheduler::constant(&m, Action::Right);
        let rl = reachable(&induced_chain(&m, &l).unwrap());
        let rr = reachable(&induced_chain(&m, &r).unwrap());
        assert_ne!(rl, rr);
        assert_eq!(rl.len(), rr.len());
        let both: Vec<_> = rl.iter().filter(|s| rr.contains(s)).collect();
        assert!(both.contains(&&0) && both.contains(&&1));
    }

    impl<'a> ChainView<'a> {
        fn row_of_action(&self, s: StateId, a: Action) -> Row<'a> {
            let c = self.model.choices(s).iter().find(|c| c.action == a).unwrap();
            Row::Edges(self.model.edges(c))
        }
    }
}
