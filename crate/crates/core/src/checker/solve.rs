//! Linear-equation and Bellman-equation solvers over explored models.
//!
//! Every quantity is the least solution of `x = b + A x` (chains) or
//! `x = opt_a (b + A_a x)` (MDPs), where `b` is the reward vector or the
//! target indicator. States that cannot reach a positive entry of `b` are
//! fixed to zero first, which makes the remaining linear systems regular.

use std::collections::HashMap;

use crate::model::graph::tarjan_scc;
use crate::model::{ChainView, PartialModel, Row, StateId};
use crate::frontend::OptMode;
use crate::scalar::Scalar;

/// What to compute on a model.
#[derive(Clone, Copy, Debug)]
pub enum Quantity<'a> {
    /// Probability of eventually reaching one of the given states.
    Reach(&'a [StateId]),
    /// Expected reward collected before the sink; diverging paths collect 0.
    Reward,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Components up to this size are solved by Gaussian elimination.
    pub dense_limit: usize,
    pub epsilon: f64,
    pub max_iterations: u64,
}

impl SolveOptions {
    pub fn exact() -> Self {
        SolveOptions {
            dense_limit: usize::MAX,
            epsilon: 0.0,
            max_iterations: u64::MAX,
        }
    }
}

/// Per-state values of one quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T> {
    pub values: Vec<T>,
    /// Sweeps spent in iterative components (0 when solved directly).
    pub iterations: u64,
    /// Whether every iterative component met the tolerance.
    pub converged: bool,
}

impl<T: Clone> Solution<T> {
    pub fn at(&self, s: StateId) -> T {
        self.values[s as usize].clone()
    }
}

fn weight_values<T: Scalar>(m: &PartialModel) -> Vec<T> {
    m.weights()
        .iter()
        .map(|w| {
            T::from_rational(
                w.exact
                    .as_ref()
                    .expect("numeric solvers need a parameter-free model"),
            )
        })
        .collect()
}

fn base_vector<T: Scalar>(m: &PartialModel, q: &Quantity) -> (Vec<T>, Vec<bool>) {
    let n = m.num_states();
    let mut b = vec![T::zero(); n];
    let mut fixed = vec![false; n];
    match q {
        Quantity::Reach(targets) => {
            for &t in targets.iter() {
                b[t as usize] = T::one();
                fixed[t as usize] = true;
            }
        }
        Quantity::Reward => {
            for (s, r) in m.rewarded() {
                b[s as usize] = T::from_rational(r);
            }
        }
    }
    (b, fixed)
}

/// Predecessor lists in CSR form for the edges produced by `rows`.
fn predecessors<'a, I>(n: usize, rows: impl Fn(StateId) -> I) -> (Vec<u32>, Vec<StateId>)
where
    I: Iterator<Item = StateId> + 'a,
{
    let mut start = vec![0u32; n + 1];
    for s in 0..n as StateId {
        for t in rows(s) {
            start[t as usize + 1] += 1;
        }
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut preds = vec![0; start[n] as usize];
    for s in 0..n as StateId {
        for t in rows(s) {
            preds[fill[t as usize] as usize] = s;
            fill[t as usize] += 1;
        }
    }
    (start, preds)
}

fn backward_from<T: Scalar>(b: &[T], start: &[u32], preds: &[StateId]) -> Vec<bool> {
    let mut seen = vec![false; b.len()];
    let mut stack: Vec<StateId> = Vec::new();
    for (s, v) in b.iter().enumerate() {
        if !v.is_zero() {
            seen[s] = true;
            stack.push(s as StateId);
        }
    }
    while let Some(t) = stack.pop() {
        for &p in &preds[start[t as usize] as usize..start[t as usize + 1] as usize] {
            if !seen[p as usize] {
                seen[p as usize] = true;
                stack.push(p);
            }
        }
    }
    seen
}

fn chain_edges<'a>(view: &ChainView<'a>, s: StateId, fixed: &[bool]) -> &'a [(u32, StateId)] {
    if fixed[s as usize] {
        return &[];
    }
    match view.row(s) {
        Row::Absorbing => &[],
        Row::Edges(es) => es,
    }
}

/// Solves a quantity on a Markov chain component by component, in reverse
/// topological order. Components up to `dense_limit` states are solved by
/// Gaussian elimination, larger ones by Gauss-Seidel iteration from zero.
pub fn solve_chain<T: Scalar>(view: &ChainView, q: &Quantity, opts: &SolveOptions) -> Solution<T> {
    solve_chain_with(view, q, opts, &weight_values::<T>(view.model()))
}

/// [`solve_chain`] with the weight table replaced by `w`, indexed like
/// [`PartialModel::weights`]. Lets a parametric model be solved at many
/// parameter points without instantiating it.
pub fn solve_chain_with<T: Scalar>(view: &ChainView, q: &Quantity, opts: &SolveOptions, w: &[T]) -> Solution<T> {
    let m = view.model();
    let n = m.num_states();
    assert_eq!(w.len(), m.weights().len());
    let (b, fixed) = base_vector::<T>(m, q);
    let (start, preds) = predecessors(n, |s| chain_edges(view, s, &fixed).iter().map(|e| e.1));
    let relevant = backward_from(&b, &start, &preds);

    let mut x = vec![T::zero(); n];
    for s in 0..n {
        if fixed[s] {
            x[s] = b[s].clone();
        }
    }
    let sccs = tarjan_scc(n, |s, out| {
        if relevant[s as usize] {
            out.extend(
                chain_edges(view, s, &fixed)
                    .iter()
                    .map(|e| e.1)
                    .filter(|&t| relevant[t as usize]),
            );
        }
    });
    let mut iterations = 0;
    let mut converged = true;
    let mut local: HashMap<StateId, usize> = HashMap::new();
    for comp in &sccs {
        if comp.iter().any(|&s| !relevant[s as usize] || fixed[s as usize]) {
            continue;
        }
        if comp.len() == 1 {
            let s = comp[0];
            let mut rhs = b[s as usize].clone();
            let mut self_w = T::zero();
            for &(wid, t) in chain_edges(view, s, &fixed) {
                if t == s {
                    self_w = self_w + w[wid as usize].clone();
                } else {
                    rhs = rhs + w[wid as usize].clone() * x[t as usize].clone();
                }
            }
            let one_minus = T::one() - self_w;
            x[s as usize] = if one_minus.is_zero() { T::zero() } else { rhs / one_minus };
            continue;
        }
        local.clear();
        local.extend(comp.iter().enumerate().map(|(i, &s)| (s, i)));
        if comp.len() <= opts.dense_limit {
            let k = comp.len();
            let mut a = vec![vec![T::zero(); k + 1]; k];
            for (i, &s) in comp.iter().enumerate() {
                a[i][i] = T::one();
                let mut rhs = b[s as usize].clone();
                for &(wid, t) in chain_edges(view, s, &fixed) {
                    match local.get(&t) {
                        Some(&j) => a[i][j] = a[i][j].clone() - w[wid as usize].clone(),
                        None => rhs = rhs + w[wid as usize].clone() * x[t as usize].clone(),
                    }
                }
                a[i][k] = rhs;
            }
            for (i, v) in gauss(a).into_iter().enumerate() {
                x[comp[i] as usize] = v;
            }
        } else {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                let mut change = 0.0f64;
                for &s in comp {
                    let mut v = b[s as usize].clone();
                    for &(wid, t) in chain_edges(view, s, &fixed) {
                        v = v + w[wid as usize].clone() * x[t as usize].clone();
                    }
                    change = change.max(v.distance(&x[s as usize]));
                    x[s as usize] = v;
                }
                if change <= opts.epsilon {
                    break;
                }
                if sweeps >= opts.max_iterations {
                    converged = false;
                    break;
                }
            }
            iterations += sweeps;
        }
    }
    Solution {
        values: x,
        iterations,
        converged,
    }
}

/// Gaussian elimination with partial pivoting on an augmented `k × (k+1)`
/// system known to be regular.
fn gauss<T: Scalar>(mut a: Vec<Vec<T>>) -> Vec<T> {
    let k = a.len();
    for col in 0..k {
        let pivot = (col..k)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r1, &r2| {
                a[r1][col]
                    .to_f64()
                    .abs()
                    .total_cmp(&a[r2][col].to_f64().abs())
                    .then(r2.cmp(&r1))
            })
            .expect("regular system");
        a.swap(col, pivot);
        let inv = T::one() / a[col][col].clone();
        for x in &mut a[col][col..] {
            *x = x.clone() * inv.clone();
        }
        for r in 0..k {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            let pivot_row = a[col][col..].to_vec();
            for (x, p) in a[r][col..].iter_mut().zip(pivot_row) {
                *x = x.clone() - factor.clone() * p;
            }
        }
    }
    a.into_iter().map(|row| row[k].clone()).collect()
}

/// Plain Gauss-Seidel value iteration from zero over the whole chain, in
/// state order. `observe` sees every iterate. Used as a reference for the
/// component-wise solver.
pub fn value_iteration<T: Scalar>(
    view: &ChainView,
    q: &Quantity,
    opts: &SolveOptions,
    mut observe: impl FnMut(&[T]),
) -> Solution<T> {
    let m = view.model();
    let n = m.num_states();
    let w = weight_values::<T>(m);
    let (b, fixed) = base_vector::<T>(m, q);
    let mut x = vec![T::zero(); n];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_iterations {
        sweeps += 1;
        let mut change = 0.0f64;
        for s in 0..n as StateId {
            let mut v = b[s as usize].clone();
            for &(wid, t) in chain_edges(view, s, &fixed) {
                v = v + w[wid as usize].clone() * x[t as usize].clone();
            }
            change = change.max(v.distance(&x[s as usize]));
            x[s as usize] = v;
        }
        observe(&x);
        if change <= opts.epsilon {
            converged = true;
            break;
        }
    }
    Solution {
        values: x,
        iterations: sweeps,
        converged,
    }
}

/// Optimal (min or max over memoryless schedulers) values on an MDP.
///
/// Trivial components are solved in closed form per action; cyclic ones by
/// Bellman iteration from zero, which converges to the least fixed point
/// from below.
pub fn solve_mdp<T: Scalar>(
    m: &PartialModel,
    q: &Quantity,
    mode: OptMode,
    opts: &SolveOptions,
) -> Solution<T> {
    let n = m.num_states();
    let w = weight_values::<T>(m);
    let (b, fixed) = base_vector::<T>(m, q);
    let all_edges = |s: StateId| {
        let choices = if fixed[s as usize] { &[][..] } else { m.choices(s) };
        choices.iter().flat_map(move |c| m.edges(c).iter().map(|e| e.1))
    };
    let (start, preds) = predecessors(n, all_edges);
    let relevant = backward_from(&b, &start, &preds);
    let mut x = vec![T::zero(); n];
    for s in 0..n {
        if fixed[s] {
            x[s] = b[s].clone();
        }
    }
    let pick = |acc: Option<T>, v: T| -> Option<T> {
        Some(match acc {
            None => v,
            Some(a) => match mode {
                OptMode::Min => T::min_of(a, v),
                OptMode::Max => T::max_of(a, v),
            },
        })
    };
    let sccs = tarjan_scc(n, |s, out| {
        if relevant[s as usize] {
            out.extend(all_edges(s).filter(|&t| relevant[t as usize]));
        }
    });
    let mut iterations = 0;
    let mut converged = true;
    for comp in &sccs {
        if comp.iter().any(|&s| !relevant[s as usize] || fixed[s as usize]) {
            continue;
        }
        if comp.len() == 1 {
            let s = comp[0];
            let mut best = None;
            for c in m.choices(s) {
                let mut rhs = b[s as usize].clone();
                let mut self_w = T::zero();
                for &(wid, t) in m.edges(c) {
                    if t == s {
                        self_w = self_w + w[wid as usize].clone();
                    } else {
                        rhs = rhs + w[wid as usize].clone() * x[t as usize].clone();
                    }
                }
                let one_minus = T::one() - self_w;
                let v = if one_minus.is_zero() { T::zero() } else { rhs / one_minus };
                best = pick(best, v);
            }
            x[s as usize] = best.unwrap_or_else(T::zero);
            continue;
        }
        let mut sweeps = 0;
        loop {
            sweeps += 1;
            let mut change = 0.0f64;
            for &s in comp {
                let mut best = None;
                for c in m.choices(s) {
                    let mut v = b[s as usize].clone();
                    for &(wid, t) in m.edges(c) {
                        v = v + w[wid as usize].clone() * x[t as usize].clone();
                    }
                    best = pick(best, v);
                }
                let v = best.unwrap_or_else(T::zero);
                change = change.max(v.distance(&x[s as usize]));
                x[s as usize] = v;
            }
            if change <= opts.epsilon {
                break;
            }
            if sweeps >= opts.max_iterations {
                converged = false;
                break;
            }
        }
        iterations += sweeps;
    }
    Solution {
        values: x,
        iterations,
        converged,
    }
}

/// Whether the transition graph has no cycles other than self-loops, so
/// that [`solve_mdp`] needs no iteration.
pub fn mdp_is_acyclic(m: &PartialModel) -> bool {
    crate::model::graph::model_sccs(m).iter().all(|c| c.len() == 1)
}
