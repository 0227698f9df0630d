//! Expressions resolved against a variable table, and their evaluation.

use std::collections::HashMap;

use crate::frontend::{AExpr, BExpr, CmpOp};

use super::{Int, SemanticsError, Valuation};

/// Variable name to slot index, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    pub fn new<I: IntoIterator<Item = String>>(names: I) -> Self {
        let names: Vec<String> = names.into_iter().collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        VarTable { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Result<usize, SemanticsError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| SemanticsError::UnknownVariable(name.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArithExpr {
    Const(Int),
    Var(usize),
    Add(Box<ArithExpr>, Box<ArithExpr>),
    Sub(Box<ArithExpr>, Box<ArithExpr>),
    Mul(Box<ArithExpr>, Box<ArithExpr>),
    Neg(Box<ArithExpr>),
}

impl ArithExpr {
    pub fn compile(e: &AExpr, vars: &VarTable) -> Result<Self, SemanticsError> {
        Ok(match e {
            AExpr::Int(v) => ArithExpr::Const(Int::from_big(v.clone())),
            AExpr::Var(name) => ArithExpr::Var(vars.lookup(name)?),
            AExpr::Add(a, b) => ArithExpr::Add(
                Box::new(Self::compile(a, vars)?),
                Box::new(Self::compile(b, vars)?),
            ),
            AExpr::Sub(a, b) => ArithExpr::Sub(
                Box::new(Self::compile(a, vars)?),
                Box::new(Self::compile(b, vars)?),
            ),
            AExpr::Mul(a, b) => ArithExpr::Mul(
                Box::new(Self::compile(a, vars)?),
                Box::new(Self::compile(b, vars)?),
            ),
            AExpr::Neg(a) => ArithExpr::Neg(Box::new(Self::compile(a, vars)?)),
        })
    }

    pub fn eval(&self, sigma: &[Int]) -> Int {
        match self {
            ArithExpr::Const(c) => c.clone(),
            ArithExpr::Var(i) => sigma[*i].clone(),
            ArithExpr::Add(a, b) => a.eval(sigma).add(&b.eval(sigma)),
            ArithExpr::Sub(a, b) => a.eval(sigma).sub(&b.eval(sigma)),
            ArithExpr::Mul(a, b) => a.eval(sigma).mul(&b.eval(sigma)),
            ArithExpr::Neg(a) => a.eval(sigma).neg(),
        }
    }

    /// Fast path for `x + c`, `x`, `c` over inline integers.
    #[inline]
    pub fn eval_small(&self, sigma: &[Int]) -> Option<i64> {
        match self {
            ArithExpr::Const(Int::Small(c)) => Some(*c),
            ArithExpr::Var(i) => sigma[*i].to_i64(),
            ArithExpr::Add(a, b) => a.eval_small(sigma)?.checked_add(b.eval_small(sigma)?),
            ArithExpr::Sub(a, b) => a.eval_small(sigma)?.checked_sub(b.eval_small(sigma)?),
            ArithExpr::Mul(a, b) => a.eval_small(sigma)?.checked_mul(b.eval_small(sigma)?),
            ArithExpr::Neg(a) => a.eval_small(sigma)?.checked_neg(),
            ArithExpr::Const(Int::Big(_)) => None,
        }
    }

    #[inline]
    pub fn eval_fast(&self, sigma: &[Int]) -> Int {
        match self.eval_small(sigma) {
            Some(v) => Int::Small(v),
            None => self.eval(sigma),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Cmp(CmpOp, ArithExpr, ArithExpr),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn compile(e: &BExpr, vars: &VarTable) -> Result<Self, SemanticsError> {
        Ok(match e {
            BExpr::Const(b) => BoolExpr::Const(*b),
            BExpr::Cmp(op, a, b) => BoolExpr::Cmp(
                *op,
                ArithExpr::compile(a, vars)?,
                ArithExpr::compile(b, vars)?,
            ),
            BExpr::Not(a) => BoolExpr::Not(Box::new(Self::compile(a, vars)?)),
            BExpr::And(a, b) => BoolExpr::And(
                Box::new(Self::compile(a, vars)?),
                Box::new(Self::compile(b, vars)?),
            ),
            BExpr::Or(a, b) => BoolExpr::Or(
                Box::new(Self::compile(a, vars)?),
                Box::new(Self::compile(b, vars)?),
            ),
        })
    }

    pub fn eval(&self, sigma: &[Int]) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Cmp(op, a, b) => match (a.eval_small(sigma), b.eval_small(sigma)) {
                (Some(x), Some(y)) => op.holds(&x, &y),
                _ => op.holds(&a.eval(sigma), &b.eval(sigma)),
            },
            BoolExpr::Not(a) => !a.eval(sigma),
            BoolExpr::And(a, b) => a.eval(sigma) && b.eval(sigma),
            BoolExpr::Or(a, b) => a.eval(sigma) || b.eval(sigma),
        }
    }
}

/// `⟦e⟧σ`
pub fn eval_arith(e: &ArithExpr, sigma: &Valuation) -> Int {
    e.eval_fast(sigma.as_slice())
}

/// `σ ⊨ g`
pub fn eval_bool(g: &BoolExpr, sigma: &Valuation) -> bool {
    g.eval(sigma.as_slice())
}
