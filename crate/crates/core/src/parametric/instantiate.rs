use std::collections::HashSet;

use num_traits::{One, Zero};

use super::{ParamValuation, ParametricError};
use crate::model::{PartialModel, StateId, WeightEntry};
use crate::Rational;

/// Evaluates every weight of `m` at `u` and checks that the result is a
/// family of probability distributions.
pub fn instantiate_weights(m: &PartialModel, u: &ParamValuation) -> Result<Vec<Rational>, ParametricError> {
    let values = m
        .weights()
        .iter()
        .map(|w| match &w.exact {
            Some(c) => Ok(c.clone()),
            None => w.function.evaluate(u),
        })
        .collect::<Result<Vec<_>, _>>()?;
    // Many states share the same multiset of weight ids; check each once.
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    for s in 0..m.num_states() as StateId {
        for c in m.choices(s) {
            let mut ids: Vec<u32> = m.edges(c).iter().map(|&(w, _)| w).collect();
            ids.sort_unstable();
            if seen.contains(&ids) {
                continue;
            }
            let mut sum = Rational::zero();
            for &w in &ids {
                let v = &values[w as usize];
                if v < &Rational::zero() || v > &Rational::one() {
                    return Err(ParametricError::WeightOutOfRange {
                        state: s,
                        weight: m.weight(w).function.to_string(),
                        value: v.clone(),
                    });
                }
                sum += v;
            }
            if !sum.is_one() {
                return Err(ParametricError::NotADistribution { state: s, sum });
            }
            seen.insert(ids);
        }
    }
    Ok(values)
}

/// The parameter-free model obtained by evaluating all weights at `u`.
pub fn instantiate(m: &PartialModel, u: &ParamValuation) -> Result<PartialModel, ParametricError> {
    let values = instantiate_weights(m, u)?;
    let weights = values
        .into_iter()
        .map(|v| WeightEntry::new(super::RationalFunction::constant(v)))
        .collect();
    Ok(m.with_weights(weights))
}
