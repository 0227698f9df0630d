//! Exact arithmetic over program parameters, instantiation of parametric
//! models, state elimination and parameter-space scanning.

mod eliminate;
mod instantiate;
mod poly;
mod ratfunc;
mod region;

use std::collections::BTreeMap;

use thiserror::Error;

pub use eliminate::{eliminate, eliminate_quantity, Elimination};
pub use instantiate::{instantiate, instantiate_weights};
pub use poly::{gcd, Monomial, Polynomial};
pub use ratfunc::{RationalFunction, REDUCE_DEGREE_CAP};
pub use region::{parse_grid, region_scan, region_scan_with, Axis, Cell, CellClass, CellSample, RegionGrid, RegionScanConfig};

use crate::model::StateId;
use crate::Rational;

/// Total assignment of rationals to parameters.
pub type ParamValuation = BTreeMap<String, Rational>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParametricError {
    #[error("no value for parameter {0}")]
    MissingParameter(String),
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("valuation is a root of a denominator")]
    IllDefinedPoint,
    #[error("state {state}: weight {weight} evaluates to {value}, outside [0, 1]")]
    WeightOutOfRange { state: StateId, weight: String, value: Rational },
    #[error("state {state}: outgoing weights sum to {sum}, not 1")]
    NotADistribution { state: StateId, sum: Rational },
    #[error("state elimination needs a model without nondeterminism")]
    Nondeterministic,
}

impl ParametricError {
    /// Whether the error says the valuation is not well defined, as opposed
    /// to a malformed request.
    pub fn is_well_definedness_violation(&self) -> bool {
        matches!(
            self,
            ParametricError::IllDefinedPoint
                | ParametricError::WeightOutOfRange { .. }
                | ParametricError::NotADistribution { .. }
        )
    }
}
