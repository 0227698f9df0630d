//! Bounded model checking for probabilistic programs with conditioning.
//!
//! A program is parsed by [`frontend`], its operational Markov decision
//! process is unrolled on demand by [`explorer`] (states and transitions
//! live in [`model`], successors come from [`semantics`]), and [`checker`]
//! computes lower bounds on conditional termination probabilities and
//! conditional expectations that only grow as the unrolling proceeds.
//! [`parametric`] adds exact polynomial and rational-function arithmetic
//! for programs whose probabilities are symbolic.
//!
//! Numerical code is generic over [`Scalar`]; the aliases below name the
//! two instantiations the checker uses.

pub mod checker;
pub mod corpus;
pub mod explorer;
pub mod frontend;
pub mod model;
pub mod parametric;
pub mod scalar;
pub mod semantics;

pub use scalar::{Field, Number, Scalar};

/// Exact rational numbers.
pub type Rational = num_rational::BigRational;
/// Arbitrary-precision integers.
pub type Integer = num_bigint::BigInt;

/// Per-state solution vectors over exact rationals.
pub type ExactSolution = checker::Solution<Rational>;
/// Per-state solution vectors over machine floats.
pub type FloatSolution = checker::Solution<f64>;
