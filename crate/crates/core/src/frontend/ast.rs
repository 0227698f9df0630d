//! Syntax trees for cpGCL programs and properties.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

use crate::parametric::Polynomial;
use crate::Rational;

/// Source position. Positions never take part in AST equality, so a
/// re-parsed program compares equal to the original.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    /// Declared variables with their initial values, in declaration order.
    pub decls: Vec<Decl>,
    /// Parameters occurring in probability annotations.
    pub params: BTreeSet<String>,
    pub body: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub init: BigInt,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Skip,
    Abort,
    Assign {
        var: String,
        expr: AExpr,
    },
    /// `x := unif(lo, hi)`: uniform over the closed integer interval.
    Uniform {
        var: String,
        lo: AExpr,
        hi: AExpr,
    },
    /// Sequential composition of the contained statements.
    Block(Vec<Stmt>),
    If {
        cond: BExpr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    /// `{left} [weight] {right}`: left with probability `weight`.
    Prob {
        left: Box<Stmt>,
        weight: Polynomial,
        right: Box<Stmt>,
    },
    /// `{left} [] {right}`
    Nondet {
        left: Box<Stmt>,
        right: Box<Stmt>,
    },
    While {
        cond: BExpr,
        body: Box<Stmt>,
    },
    Observe(BExpr),
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn block(stmts: Vec<Stmt>, span: Span) -> Self {
        Stmt::new(StmtKind::Block(stmts), span)
    }

    pub fn is_empty_block(&self) -> bool {
        matches!(&self.kind, StmtKind::Block(v) if v.is_empty())
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(stmts) => stmts.iter().for_each(|s| s.walk(f)),
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                else_branch.walk(f);
            }
            StmtKind::Prob { left, right, .. } | StmtKind::Nondet { left, right } => {
                left.walk(f);
                right.walk(f);
            }
            StmtKind::While { body, .. } => body.walk(f),
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AExpr {
    Int(BigInt),
    Var(String),
    Add(Box<AExpr>, Box<AExpr>),
    Sub(Box<AExpr>, Box<AExpr>),
    Mul(Box<AExpr>, Box<AExpr>),
    Neg(Box<AExpr>),
}

impl AExpr {
    pub fn vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            AExpr::Int(_) => {}
            AExpr::Var(v) => out.push(v),
            AExpr::Add(a, b) | AExpr::Sub(a, b) | AExpr::Mul(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            AExpr::Neg(a) => a.vars(out),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BExpr {
    Const(bool),
    Cmp(CmpOp, AExpr, AExpr),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
}

impl BExpr {
    pub fn vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            BExpr::Const(_) => {}
            BExpr::Cmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            BExpr::Not(a) => a.vars(out),
            BExpr::And(a, b) | BExpr::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

/// Threshold comparison of a property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }

    pub fn is_lower_bound(self) -> bool {
        matches!(self, Comparison::Gt | Comparison::Ge)
    }
}

/// Scheduler resolution: the property must hold for every scheduler, so
/// lower bounds are checked against the minimum and upper bounds against
/// the maximum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMode {
    Min,
    Max,
}

impl fmt::Display for OptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptMode::Min => "min",
            OptMode::Max => "max",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum PropertyKind {
    Probability,
    Expectation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Conditional probability that the program terminates in a state
    /// satisfying the predicate.
    Probability(BExpr),
    /// Conditional expected value of the post-expectation at termination.
    Expectation(AExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Property {
    pub objective: Objective,
    pub comparison: Comparison,
    pub threshold: Rational,
    pub mode: OptMode,
}

impl Property {
    pub fn kind(&self) -> PropertyKind {
        match self.objective {
            Objective::Probability(_) => PropertyKind::Probability,
            Objective::Expectation(_) => PropertyKind::Expectation,
        }
    }

    /// The same query with a different threshold and comparison; the
    /// scheduler mode is kept.
    pub fn with_bound(&self, comparison: Comparison, threshold: Rational) -> Property {
        Property {
            comparison,
            threshold,
            ..self.clone()
        }
    }
}
