//! Rational functions over the program parameters.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::{gcd, Polynomial};
use super::{ParamValuation, ParametricError};
use crate::Rational;

/// Operands whose total degree exceeds this stay unreduced.
pub const REDUCE_DEGREE_CAP: u32 = 40;

/// `numerator / denominator` with a monic, nonzero denominator.
#[derive(Clone)]
pub struct RationalFunction {
    numer: Polynomial,
    denom: Polynomial,
}

impl RationalFunction {
    pub fn new(numer: Polynomial, denom: Polynomial) -> Result<Self, ParametricError> {
        if denom.is_zero() {
            return Err(ParametricError::DivisionByZero);
        }
        Ok(Self::normalized(numer, denom))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            numer: p,
            denom: Polynomial::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    fn normalized(numer: Polynomial, denom: Polynomial) -> Self {
        if numer.is_zero() {
            return RationalFunction::zero();
        }
        if let Some(d) = denom.constant_value() {
            return RationalFunction {
                numer: numer.scale(&(Rational::one() / d)),
                denom: Polynomial::one(),
            };
        }
        let (numer, denom) = if numer.total_degree() <= REDUCE_DEGREE_CAP
            && denom.total_degree() <= REDUCE_DEGREE_CAP
        {
            let g = gcd(&numer, &denom);
            if g.is_one() {
                (numer, denom)
            } else {
                (
                    numer.div_exact(&g).expect("gcd divides numerator"),
                    denom.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        } else {
            (numer, denom)
        };
        let lc = denom.leading().map(|(_, c)| c.clone()).expect("nonzero");
        let inv = Rational::one() / lc;
        RationalFunction {
            numer: numer.scale(&inv),
            denom: denom.scale(&inv),
        }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numer
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denom
    }

    pub fn is_constant(&self) -> bool {
        self.numer.is_constant() && self.denom.is_constant()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        Some(self.numer.constant_value()? / self.denom.constant_value()?)
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        self.denom.is_one().then_some(&self.numer)
    }

    pub fn total_degree(&self) -> u32 {
        self.numer.total_degree().max(self.denom.total_degree())
    }

    pub fn evaluate(&self, u: &ParamValuation) -> Result<Rational, ParametricError> {
        let d = self.denom.evaluate(u)?;
        if d.is_zero() {
            return Err(ParametricError::IllDefinedPoint);
        }
        Ok(self.numer.evaluate(u)? / d)
    }

    pub fn checked_div(&self, rhs: &RationalFunction) -> Result<RationalFunction, ParametricError> {
        if rhs.numer.is_zero() {
            return Err(ParametricError::DivisionByZero);
        }
        Ok(Self::normalized(&self.numer * &rhs.denom, &self.denom * &rhs.numer))
    }
}

impl PartialEq for RationalFunction {
    fn eq(&self, other: &Self) -> bool {
        if self.denom == other.denom {
            return self.numer == other.numer;
        }
        &self.numer * &other.denom == &other.numer * &self.denom
    }
}

impl Zero for RationalFunction {
    fn zero() -> Self {
        RationalFunction {
            numer: Polynomial::zero(),
            denom: Polynomial::one(),
        }
    }

    fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }
}

impl One for RationalFunction {
    fn one() -> Self {
        RationalFunction::from_poly(Polynomial::one())
    }
}

impl Add for RationalFunction {
    type Output = RationalFunction;

    fn add(self, rhs: RationalFunction) -> RationalFunction {
        if self.denom == rhs.denom {
            return Self::normalized(&self.numer + &rhs.numer, self.denom);
        }
        Self::normalized(
            &(&self.numer * &rhs.denom) + &(&rhs.numer * &self.denom),
            &self.denom * &rhs.denom,
        )
    }
}

impl Sub for RationalFunction {
    type Output = RationalFunction;

    fn sub(self, rhs: RationalFunction) -> RationalFunction {
        self + (-rhs)
    }
}

impl Mul for RationalFunction {
    type Output = RationalFunction;

    fn mul(self, rhs: RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        Self::normalized(&self.numer * &rhs.numer, &self.denom * &rhs.denom)
    }
}

/// Panics on a zero divisor; use [`RationalFunction::checked_div`] when the
/// divisor is not known to be nonzero.
impl Div for RationalFunction {
    type Output = RationalFunction;

    fn div(self, rhs: RationalFunction) -> RationalFunction {
        self.checked_div(&rhs).expect("division by the zero rational function")
    }
}

impl Neg for RationalFunction {
    type Output = RationalFunction;

    fn neg(self) -> RationalFunction {
        RationalFunction {
            numer: -self.numer,
            denom: self.denom,
        }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom.is_one() {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "({})/({})", self.numer, self.denom)
        }
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn var(v: &str) -> RationalFunction {
        RationalFunction::from_poly(Polynomial::var(v))
    }

    fn k(n: i64, d: i64) -> RationalFunction {
        RationalFunction::constant(q(n, d))
    }

    #[test]
    fn f_over_one_minus_b() {
        let h = var("f") / (k(1, 1) - var("b"));
        let u: ParamValuation = [("f".to_string(), q(4, 5)), ("b".to_string(), q(91, 1000))]
            .into_iter()
            .collect();
        // Independent route: evaluate the pieces first, then divide.
        let expected = q(4, 5) / (q(1, 1) - q(91, 1000));
        assert_eq!(expected, q(800, 909));
        assert_eq!(h.evaluate(&u).unwrap(), expected);
    }

    #[test]
    fn g_over_g_is_one() {
        let g = var("f") * var("b") + k(1, 3);
        assert_eq!(g.clone() / g, RationalFunction::one());
        let h = (k(1, 1) - var("p")) / (k(2, 1) - var("p") * k(2, 1));
        assert_eq!(h, k(1, 2));
        assert!(h.is_constant());
    }

    #[test]
    fn evaluation_at_denominator_root_fails() {
        let h = k(1, 1) / (k(1, 1) - var("b"));
        let u: ParamValuation = [("b".to_string(), q(1, 1))].into_iter().collect();
        assert!(matches!(h.evaluate(&u), Err(ParametricError::IllDefinedPoint)));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(matches!(
            var("f").checked_div(&RationalFunction::zero()),
            Err(ParametricError::DivisionByZero)
        ));
        assert!(RationalFunction::new(Polynomial::one(), Polynomial::zero()).is_err());
    }

    #[test]
    fn denominators_are_monic() {
        let h = var("x") / (var("x") * k(-3, 1) + k(1, 1));
        let (_, lc) = h.denominator().leading().unwrap();
        assert!(lc.is_one());
    }
}
