//! Graph utilities over the explored model.

use super::{PartialModel, StateId};

/// Strongly connected components in reverse topological order: every
/// component is emitted after all components it can reach.
///
/// `succ(s, out)` appends the successors of `s` to `out`.
pub fn tarjan_scc<F>(n: usize, mut succ: F) -> Vec<Vec<StateId>>
where
    F: FnMut(StateId, &mut Vec<StateId>),
{
    const UNVISITED: u32 = u32::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<StateId> = Vec::new();
    let mut sccs = Vec::new();
    let mut next_index = 0u32;
    // Call stack of (state, its successor list, position in that list).
    let mut frames: Vec<(StateId, Vec<StateId>, usize)> = Vec::new();
    let mut spare: Vec<Vec<StateId>> = Vec::new();

    for root in 0..n as StateId {
        if index[root as usize] != UNVISITED {
            continue;
        }
        let mut push = |s: StateId,
                        frames: &mut Vec<(StateId, Vec<StateId>, usize)>,
                        spare: &mut Vec<Vec<StateId>>,
                        index: &mut Vec<u32>,
                        lowlink: &mut Vec<u32>,
                        stack: &mut Vec<StateId>,
                        on_stack: &mut Vec<bool>,
                        next_index: &mut u32| {
            index[s as usize] = *next_index;
            lowlink[s as usize] = *next_index;
            *next_index += 1;
            stack.push(s);
            on_stack[s as usize] = true;
            let mut out = spare.pop().unwrap_or_default();
            out.clear();
            succ(s, &mut out);
            frames.push((s, out, 0));
        };
        push(
            root,
            &mut frames,
            &mut spare,
            &mut index,
            &mut lowlink,
            &mut stack,
            &mut on_stack,
            &mut next_index,
        );
        while let Some(frame) = frames.last_mut() {
            let s = frame.0;
            if frame.2 < frame.1.len() {
                let t = frame.1[frame.2];
                frame.2 += 1;
                if index[t as usize] == UNVISITED {
                    push(
                        t,
                        &mut frames,
                        &mut spare,
                        &mut index,
                        &mut lowlink,
                        &mut stack,
                        &mut on_stack,
                        &mut next_index,
                    );
                } else if on_stack[t as usize] {
                    lowlink[s as usize] = lowlink[s as usize].min(index[t as usize]);
                }
                continue;
            }
            let (s, out, _) = frames.pop().unwrap();
            spare.push(out);
            if let Some(parent) = frames.last() {
                let p = parent.0 as usize;
                lowlink[p] = lowlink[p].min(lowlink[s as usize]);
            }
            if lowlink[s as usize] == index[s as usize] {
                let mut comp = Vec::new();
                loop {
                    let t = stack.pop().unwrap();
                    on_stack[t as usize] = false;
                    comp.push(t);
                    if t == s {
                        break;
                    }
                }
                comp.reverse();
                sccs.push(comp);
            }
        }
    }
    sccs
}

/// Components of the model's transition graph, over all actions.
pub fn model_sccs(m: &PartialModel) -> Vec<Vec<StateId>> {
    tarjan_scc(m.num_states(), |s, out| {
        for c in m.choices(s) {
            out.extend(m.edges(c).iter().map(|&(_, t)| t));
        }
    })
}

/// States from which some state in `targets` is reachable (over all actions),
/// including the targets themselves.
pub fn backward_reachable(m: &PartialModel, targets: impl IntoIterator<Item = StateId>) -> Vec<bool> {
    let n = m.num_states();
    let mut pred_start = vec![0u32; n + 1];
    for s in 0..n as StateId {
        for c in m.choices(s) {
            for &(_, t) in m.edges(c) {
                pred_start[t as usize + 1] += 1;
            }
        }
    }
    for i in 0..n {
        pred_start[i + 1] += pred_start[i];
    }
    let mut fill = pred_start.clone();
    let mut preds = vec![0 as StateId; pred_start[n] as usize];
    for s in 0..n as StateId {
        for c in m.choices(s) {
            for &(_, t) in m.edges(c) {
                preds[fill[t as usize] as usize] = s;
                fill[t as usize] += 1;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<StateId> = Vec::new();
    for t in targets {
        if !seen[t as usize] {
            seen[t as usize] = true;
            stack.push(t);
        }
    }
    while let Some(t) = stack.pop() {
        for &p in &preds[pred_start[t as usize] as usize..pred_start[t as usize + 1] as usize] {
            if !seen[p as usize] {
                seen[p as usize] = true;
                stack.push(p);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sccs_of(edges: &[(u32, u32)], n: usize) -> Vec<Vec<u32>> {
        tarjan_scc(n, |s, out| {
            out.extend(edges.iter().filter(|e| e.0 == s).map(|e| e.1));
        })
    }

    #[test]
    fn components_come_in_reverse_topological_order() {
        // 0 -> 1 <-> 2 -> 3, 3 -> 3
        let sccs = sccs_of(&[(0, 1), (1, 2), (2, 1), (2, 3), (3, 3)], 4);
        assert_eq!(sccs, vec![vec![3], vec![1, 2], vec![0]]);
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000;
        let sccs = tarjan_scc(n, |s, out| {
            if (s as usize) + 1 < n {
                out.push(s + 1)
            }
        });
        assert_eq!(sccs.len(), n);
        assert_eq!(sccs[0], vec![n as u32 - 1]);
    }

    #[test]
    fn big_cycle_is_one_component() {
        let n = 50_000u32;
        let sccs = tarjan_scc(n as usize, |s, out| out.push((s + 1) % n));
        assert_eq!(sccs.len(), 1);
        assert_eq!(sccs[0].len(), n as usize);
    }
}
