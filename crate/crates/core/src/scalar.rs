//! Numeric abstraction shared by the solvers.
//!
//! Every linear-algebra routine in the checker is written once against
//! [`Scalar`] and instantiated with exact rationals (small models, golden
//! values) or machine floats (large models). [`Field`] is the weaker
//! interface used by state elimination, which also runs over rational
//! functions.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::Rational;

/// A commutative field with exact or approximate arithmetic.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> Field for T where
    T: Clone
        + Debug
        + PartialEq
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + Neg<Output = T>
{
}

/// An ordered field the solvers can iterate in.
pub trait Scalar: Field + PartialOrd + Send + Sync + 'static {
    /// `true` when arithmetic never rounds.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// Absolute difference as a float, used for convergence tests.
    fn distance(&self, other: &Self) -> f64 {
        (self.to_f64() - other.to_f64()).abs()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn distance(&self, other: &Self) -> f64 {
        rational_to_f64(&(self - other).abs())
    }
}

/// Nearest float to a rational, robust for huge numerators and denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(r) {
        if v.is_finite() {
            return v;
        }
    }
    // Scale both parts down until they fit.
    let numer_bits = r.numer().bits() as i64;
    let denom_bits = r.denom().bits() as i64;
    let shift_n = (numer_bits - 900).max(0) as u64;
    let shift_d = (denom_bits - 900).max(0) as u64;
    let n = (r.numer() >> shift_n).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
}

/// Exact rational equal to a finite float.
pub fn f64_to_rational(v: f64) -> Option<Rational> {
    BigRational::from_float(v)
}

/// A solver output: exact when the model was solved over rationals,
/// approximate otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(Rational),
    Float(f64),
}

impl Number {
    pub fn zero() -> Self {
        Number::Exact(Rational::zero())
    }

    pub fn one() -> Self {
        Number::Exact(Rational::one())
    }

    pub fn from_scalar<T: Scalar>(v: &T) -> Self {
        // Exact scalars are rationals in this crate; recover them losslessly.
        if T::EXACT {
            let any: &dyn std::any::Any = v;
            if let Some(r) = any.downcast_ref::<Rational>() {
                return Number::Exact(r.clone());
            }
        }
        Number::Float(v.to_f64())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => rational_to_f64(r),
            Number::Float(f) => *f,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Number::Exact(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Float(f) => *f == 0.0,
        }
    }

    /// Exact comparison against a rational; floats are compared through
    /// their exact binary expansion.
    pub fn cmp_rational(&self, other: &Rational) -> Ordering {
        match self {
            Number::Exact(r) => r.cmp(other),
            Number::Float(f) => match f64_to_rational(*f) {
                Some(r) => r.cmp(other),
                None if f.is_nan() => Ordering::Less,
                None if *f > 0.0 => Ordering::Greater,
                None => Ordering::Less,
            },
        }
    }

    pub fn div(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a / b),
            _ => Number::Float(self.to_f64() / other.to_f64()),
        }
    }

    pub fn one_minus(&self) -> Number {
        match self {
            Number::Exact(r) => Number::Exact(Rational::one() - r),
            Number::Float(f) => Number::Float(1.0 - f),
        }
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Some(a.cmp(b)),
            (Number::Exact(a), Number::Float(_)) => Some(other.cmp_rational(a).reverse()),
            (Number::Float(_), Number::Exact(b)) => Some(self.cmp_rational(b)),
            (Number::Float(a), Number::Float(b)) => a.partial_cmp(b),
        }
    }
}

impl Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{}", r),
            Number::Float(v) => write!(f, "{}", v),
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

/// Parses `3`, `-2`, `0.091`, `1/100`, `3.4e-3` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", int_part, frac_part);
    let numer: BigInt = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from_u8(10).unwrap();
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Serde helpers writing rationals as `"n/d"` strings.
pub(crate) mod serde_rational {
    use std::collections::BTreeMap;

    use serde::Serializer;

    use crate::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn map<S: Serializer>(m: &BTreeMap<String, Rational>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, v.to_string())))
    }
}
