//! State elimination on parametric Markov chains.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use num_traits::{One, Zero};

use super::{ParamValuation, ParametricError, RationalFunction};
use crate::checker::Quantity;
use crate::model::{ChainView, PartialModel, Row, StateId, INITIAL_STATE};
use crate::Rational;

/// Closed forms of the conditional value's two ingredients.
#[derive(Clone, Debug, PartialEq)]
pub struct Elimination {
    /// `ER(◇sink)` as a function of the parameters.
    pub numerator: RationalFunction,
    /// `Pr(◇bad)` as a function of the parameters.
    pub bad_probability: RationalFunction,
}

impl Elimination {
    /// The conditional value at `u`, `None` when the condition has
    /// probability zero there.
    pub fn value_at(&self, u: &ParamValuation) -> Result<Option<Rational>, ParametricError> {
        let num = self.numerator.evaluate(u)?;
        let den = Rational::one() - self.bad_probability.evaluate(u)?;
        Ok((!den.is_zero()).then(|| num / den))
    }

    /// `numerator / (1 - bad_probability)` as one rational function.
    pub fn conditional(&self) -> Result<RationalFunction, ParametricError> {
        self.numerator
            .checked_div(&(RationalFunction::one() - self.bad_probability.clone()))
    }
}

/// Eliminates all states of a deterministic parametric model.
pub fn eliminate(m: &PartialModel) -> Result<Elimination, ParametricError> {
    let view = ChainView::deterministic(m).map_err(|_| ParametricError::Nondeterministic)?;
    let numerator = eliminate_quantity(&view, &Quantity::Reward)?;
    let bad_probability = match m.bad_state() {
        Some(b) => eliminate_quantity(&view, &Quantity::Reach(&[b]))?,
        None => RationalFunction::zero(),
    };
    Ok(Elimination {
        numerator,
        bad_probability,
    })
}

struct Graph {
    out: Vec<BTreeMap<StateId, RationalFunction>>,
    inc: Vec<BTreeSet<StateId>>,
    base: Vec<RationalFunction>,
}

impl Graph {
    fn degree_sum(&self, s: StateId) -> u32 {
        let out: u32 = self.out[s as usize].values().map(RationalFunction::total_degree).sum();
        let inc: u32 = self.inc[s as usize]
            .iter()
            .map(|&p| self.out[p as usize][&s].total_degree())
            .sum();
        out + inc + self.base[s as usize].total_degree()
    }

    /// Rewrites `s` to have no self-loop.
    fn fold_self_loop(&mut self, s: StateId) -> Result<(), ParametricError> {
        let Some(p) = self.out[s as usize].remove(&s) else {
            return Ok(());
        };
        self.inc[s as usize].remove(&s);
        let stay = RationalFunction::one() - p;
        if stay.is_zero() {
            // The state can never leave; its least solution is zero.
            for t in std::mem::take(&mut self.out[s as usize]).into_keys() {
                self.inc[t as usize].remove(&s);
            }
            self.base[s as usize] = RationalFunction::zero();
            return Ok(());
        }
        for w in self.out[s as usize].values_mut() {
            *w = w.checked_div(&stay)?;
        }
        self.base[s as usize] = self.base[s as usize].checked_div(&stay)?;
        Ok(())
    }

    /// Redirects every predecessor of `s` past it and removes `s`.
    fn bypass(&mut self, s: StateId) -> Result<Vec<StateId>, ParametricError> {
        self.fold_self_loop(s)?;
        let succ = std::mem::take(&mut self.out[s as usize]);
        let base = std::mem::replace(&mut self.base[s as usize], RationalFunction::zero());
        let preds = std::mem::take(&mut self.inc[s as usize]);
        for &t in succ.keys() {
            self.inc[t as usize].remove(&s);
        }
        for &p in &preds {
            let w = self.out[p as usize].remove(&s).expect("edge recorded in both directions");
            if !base.is_zero() {
                self.base[p as usize] = self.base[p as usize].clone() + w.clone() * base.clone();
            }
            for (&t, wt) in &succ {
                let add = w.clone() * wt.clone();
                let entry = self.out[p as usize].entry(t).or_insert_with(RationalFunction::zero);
                *entry = entry.clone() + add;
                if entry.is_zero() {
                    self.out[p as usize].remove(&t);
                    self.inc[t as usize].remove(&p);
                } else {
                    self.inc[t as usize].insert(p);
                }
            }
        }
        let mut touched: Vec<StateId> = preds.into_iter().chain(succ.into_keys()).collect();
        touched.sort_unstable();
        touched.dedup();
        Ok(touched)
    }
}

/// Closed form of a quantity at the initial state of a chain, by state
/// elimination in order of increasing degree sum, ties broken by state id.
pub fn eliminate_quantity(view: &ChainView, q: &Quantity) -> Result<RationalFunction, ParametricError> {
    let m = view.model();
    let n = m.num_states();
    let mut fixed = vec![false; n];
    let mut base = vec![RationalFunction::zero(); n];
    match q {
        Quantity::Reach(targets) => {
            for &t in targets.iter() {
                fixed[t as usize] = true;
                base[t as usize] = RationalFunction::one();
            }
        }
        Quantity::Reward => {
            for (s, r) in m.rewarded() {
                base[s as usize] = RationalFunction::constant(r.clone());
            }
        }
    }
    // Keep only states that can reach a positive base value.
    let mut relevant = vec![false; n];
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n as StateId {
        if fixed[s as usize] {
            continue;
        }
        if let Row::Edges(es) = view.row(s) {
            for &(_, t) in es {
                preds[t as usize].push(s);
            }
        }
    }
    let mut stack: Vec<StateId> = (0..n as StateId).filter(|&s| !base[s as usize].is_zero()).collect();
    for &s in &stack {
        relevant[s as usize] = true;
    }
    while let Some(t) = stack.pop() {
        for &p in &preds[t as usize] {
            if !relevant[p as usize] {
                relevant[p as usize] = true;
                stack.push(p);
            }
        }
    }
    if !relevant[INITIAL_STATE as usize] {
        return Ok(RationalFunction::zero());
    }

    let mut g = Graph {
        out: vec![BTreeMap::new(); n],
        inc: vec![BTreeSet::new(); n],
        base,
    };
    for s in 0..n as StateId {
        if !relevant[s as usize] || fixed[s as usize] {
            continue;
        }
        if let Row::Edges(es) = view.row(s) {
            for &(wid, t) in es {
                if !relevant[t as usize] {
                    continue;
                }
                let w = m.weight(wid).function.clone();
                let e = g.out[s as usize].entry(t).or_insert_with(RationalFunction::zero);
                *e = e.clone() + w;
                g.inc[t as usize].insert(s);
            }
        }
    }

    let mut heap: BinaryHeap<Reverse<(u32, StateId)>> = BinaryHeap::new();
    let mut key = vec![u32::MAX; n];
    for s in 0..n as StateId {
        if relevant[s as usize] && s != INITIAL_STATE {
            key[s as usize] = g.degree_sum(s);
            heap.push(Reverse((key[s as usize], s)));
        }
    }
    let mut done = vec![false; n];
    while let Some(Reverse((k, s))) = heap.pop() {
        if done[s as usize] || key[s as usize] != k {
            continue;
        }
        done[s as usize] = true;
        for t in g.bypass(s)? {
            if t != INITIAL_STATE && !done[t as usize] {
                key[t as usize] = g.degree_sum(t);
                heap.push(Reverse((key[t as usize], t)));
            }
        }
    }
    g.fold_self_loop(INITIAL_STATE)?;
    debug_assert!(g.out[INITIAL_STATE as usize].is_empty());
    Ok(g.base[INITIAL_STATE as usize].clone())
}
