//! Sparse multivariate polynomials with rational coefficients.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::{ParamValuation, ParametricError};
use crate::Rational;

/// A power product of parameters. Exponents are strictly positive and the
/// factors are kept sorted by parameter name.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(String, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(name: &str) -> Self {
        Monomial(vec![(name.to_string(), 1)])
    }

    pub fn from_factors<I: IntoIterator<Item = (String, u32)>>(factors: I) -> Self {
        let mut map: BTreeMap<String, u32> = BTreeMap::new();
        for (v, e) in factors {
            if e > 0 {
                *map.entry(v).or_default() += e;
            }
        }
        Monomial(map.into_iter().collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, var: &str) -> u32 {
        self.0
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(String, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_factors(self.0.iter().chain(other.0.iter()).cloned())
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        for (v, e) in &self.0 {
            let d = other.exponent(v);
            if d > *e {
                return None;
            }
            if e - d > 0 {
                out.push((v.clone(), e - d));
            }
        }
        if other.0.iter().any(|(v, _)| self.exponent(v) == 0) {
            return None;
        }
        Some(Monomial(out))
    }

    fn without(&self, var: &str) -> Monomial {
        Monomial(self.0.iter().filter(|(v, _)| v != var).cloned().collect())
    }
}

/// Lexicographic order with parameters ranked alphabetically.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}^{}", v, e)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A polynomial in `Q[V]`. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Polynomial { terms }
    }

    pub fn var(name: &str) -> Self {
        Polynomial::term(Rational::one(), Monomial::var(name))
    }

    pub fn term(coeff: Rational, mono: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(mono, coeff);
        }
        Polynomial { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, mono: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// The value of a parameter-free polynomial.
    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_constant() {
            Some(self.terms.values().next().cloned().unwrap_or_else(Rational::zero))
        } else {
            None
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.terms.keys().map(|m| m.exponent(var)).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| v.clone()))
            .collect()
    }

    /// Leading term under the lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_term(&self, coeff: &Rational, mono: &Monomial) -> Polynomial {
        if coeff.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.mul(mono), k * coeff))
                .collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes every parameter.
    pub fn evaluate(&self, u: &ParamValuation) -> Result<Rational, ParametricError> {
        let mut sum = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.0 {
                let x = u
                    .get(v)
                    .ok_or_else(|| ParametricError::MissingParameter(v.clone()))?;
                t *= num_traits::pow(x.clone(), *e as usize);
            }
            sum += t;
        }
        Ok(sum)
    }

    /// Float evaluation for grid scans; parameters are looked up by name.
    pub fn evaluate_f64(&self, u: &BTreeMap<String, f64>) -> Result<f64, ParametricError> {
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut t = crate::scalar::rational_to_f64(c);
            for (v, e) in &m.0 {
                let x = u
                    .get(v)
                    .ok_or_else(|| ParametricError::MissingParameter(v.clone()))?;
                t *= x.powi(*e as i32);
            }
            sum += t;
        }
        Ok(sum)
    }

    /// Coefficients of `self` viewed as a univariate polynomial in `var`,
    /// indexed by power.
    pub fn coefficients_in(&self, var: &str) -> Vec<Polynomial> {
        let deg = self.degree_in(var) as usize;
        let mut out = vec![Polynomial::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exponent(var) as usize;
            out[e].add_term(m.without(var), c.clone());
        }
        out
    }

    /// Makes the leading coefficient one.
    pub fn monic(&self) -> Polynomial {
        match self.leading() {
            Some((_, c)) if !c.is_one() => self.scale(&(Rational::one() / c)),
            _ => self.clone(),
        }
    }

    /// Exact quotient `self / divisor`, or `None` if the division leaves a
    /// remainder.
    pub fn div_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        let (lm, lc) = divisor.leading()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut rem = self.clone();
        let mut quot = Polynomial::zero();
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(&lm)?;
            let c = rc / &lc;
            rem = &rem - &divisor.mul_term(&c, &m);
            quot.add_term(m, c);
        }
        Some(quot)
    }
}

impl Zero for Polynomial {
    fn zero() -> Self {
        Polynomial {
            terms: BTreeMap::new(),
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Polynomial {
    fn one() -> Self {
        Polynomial::constant(Rational::one())
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        -&self
    }
}

/// Greatest common divisor over `Q[V]`, made monic. Uses recursive content
/// extraction and primitive pseudo-remainder sequences.
pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Polynomial::one();
    }
    let mut vars = a.variables();
    vars.extend(b.variables());
    let x = vars.iter().next().expect("non-constant").clone();

    let ca = content(a, &x);
    let cb = content(b, &x);
    let c = gcd(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");

    let g = if pa.degree_in(&x) == 0 || pb.degree_in(&x) == 0 {
        Polynomial::one()
    } else {
        let (mut r0, mut r1) = if pa.degree_in(&x) >= pb.degree_in(&x) {
            (pa, pb)
        } else {
            (pb, pa)
        };
        loop {
            let r = pseudo_remainder(&r0, &r1, &x);
            if r.is_zero() {
                break primitive_part(&r1, &x);
            }
            if r.degree_in(&x) == 0 {
                break Polynomial::one();
            }
            r0 = r1;
            // Over Q the content of a univariate remainder is a unit, so scale
            // explicitly to keep the coefficients from growing.
            r1 = primitive_part(&r, &x).monic();
        }
    };
    (&c * &g).monic()
}

/// Gcd of the coefficients of `p` in `var`.
fn content(p: &Polynomial, var: &str) -> Polynomial {
    let mut acc = Polynomial::zero();
    for c in p.coefficients_in(var) {
        if c.is_zero() {
            continue;
        }
        acc = gcd(&acc, &c);
        if acc.is_constant() {
            return Polynomial::one();
        }
    }
    acc
}

fn primitive_part(p: &Polynomial, var: &str) -> Polynomial {
    let c = content(p, var);
    p.div_exact(&c).expect("content divides")
}

fn pseudo_remainder(a: &Polynomial, b: &Polynomial, var: &str) -> Polynomial {
    let db = b.degree_in(var);
    let b_coeffs = b.coefficients_in(var);
    let lc = b_coeffs[db as usize].clone();
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(var) >= db {
        let dr = r.degree_in(var);
        let lr = r.coefficients_in(var)[dr as usize].clone();
        let shift = Polynomial::term(
            Rational::one(),
            Monomial::from_factors([(var.to_string(), dr - db)]),
        );
        r = &(&lc * &r) - &(&(&lr * &shift) * b);
    }
    r
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            if k == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", abs)?;
            } else if abs.is_one() {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", abs, m)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
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

    fn p(name: &str) -> Polynomial {
        Polynomial::var(name)
    }

    fn c(n: i64, d: i64) -> Polynomial {
        Polynomial::constant(q(n, d))
    }

    fn valuation(pairs: &[(&str, Rational)]) -> ParamValuation {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn one_minus_fb_at_halves() {
        let g = &c(1, 1) - &(&p("f") * &p("b"));
        let u = valuation(&[("f", q(1, 2)), ("b", q(1, 2))]);
        assert_eq!(g.evaluate(&u).unwrap(), q(3, 4));
    }

    #[test]
    fn g_minus_g_is_zero() {
        let g = &(&p("f") * &c(3, 7)) + &p("b");
        let sum = &g + &(-&g);
        assert!(sum.is_zero());
        assert_eq!(sum.to_string(), "0");
    }

    #[test]
    fn product_of_variables_is_single_monomial() {
        let fb = &p("f") * &p("b");
        assert_eq!(fb.num_terms(), 1);
        let (m, k) = fb.leading().unwrap();
        assert!(k.is_one());
        assert_eq!(m.exponent("f"), 1);
        assert_eq!(m.exponent("b"), 1);
    }

    #[test]
    fn missing_parameter_is_reported() {
        let err = p("f").evaluate(&ParamValuation::new()).unwrap_err();
        assert!(matches!(err, ParametricError::MissingParameter(v) if v == "f"));
    }

    #[test]
    fn exact_division_and_gcd() {
        let x = p("x");
        let y = p("y");
        let a = &(&x + &y) * &(&x - &c(1, 1));
        let b = &(&x + &y) * &(&y + &c(2, 1));
        assert_eq!(a.div_exact(&(&x + &y)).unwrap(), &x - &c(1, 1));
        assert!(a.div_exact(&(&y + &c(2, 1))).is_none());
        assert_eq!(gcd(&a, &b), &x + &y);
        let sq = &(&x + &c(1, 2)) * &(&x + &c(1, 2));
        assert_eq!(gcd(&sq.scale(&q(3, 1)), &(&x + &c(1, 2)).scale(&q(5, 1))), &x + &c(1, 2));
        assert_eq!(gcd(&x, &y), Polynomial::one());
    }

    #[test]
    fn display_is_descending_lex() {
        let g = &(&c(1, 1) - &p("b")) * &p("f");
        assert_eq!(g.to_string(), "-b*f + f");
        assert_eq!(c(91, 1000).to_string(), "91/1000");
        assert_eq!(p("f").pow(3).to_string(), "f^3");
    }
}
