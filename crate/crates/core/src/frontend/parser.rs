//! Recursive-descent parser for the C-like concrete syntax.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::FrontendError;
use crate::parametric::Polynomial;
use crate::scalar::parse_rational;
use crate::Rational;

type PResult<T> = Result<T, FrontendError>;

/// Result of parsing a condition-or-arithmetic expression before its type
/// is known.
enum Expr {
    Arith(AExpr),
    /// `chained_and` marks an unparenthesized `a & b` chain.
    Bool { expr: BExpr, chained_and: bool },
}

pub(crate) struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.peek() == &t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", tok_text(&t))))
        }
    }

    fn unexpected(&self, wanted: &str) -> FrontendError {
        FrontendError::syntax(
            self.span(),
            format!("expected {}, found {}", wanted, self.peek().describe()),
        )
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub(crate) fn program(&mut self) -> PResult<Program> {
        let mut decls = Vec::new();
        while self.is_keyword("int") {
            let span = self.span();
            self.bump();
            let name = self.ident()?;
            let init = if self.eat(&Tok::Assign) {
                self.signed_integer()?
            } else {
                BigInt::zero()
            };
            self.expect(Tok::Semi)?;
            decls.push(Decl { name, init, span });
        }
        let span = self.span();
        let mut stmts = Vec::new();
        while self.peek() != &Tok::Eof {
            if self.eat(&Tok::Semi) {
                continue;
            }
            stmts.push(self.stmt()?);
        }
        let body = Stmt::block(stmts, span);
        let mut params = BTreeSet::new();
        body.walk(&mut |s| {
            if let StmtKind::Prob { weight, .. } = &s.kind {
                params.extend(weight.variables());
            }
        });
        Ok(Program {
            decls,
            params,
            body,
        })
    }

    fn signed_integer(&mut self) -> PResult<BigInt> {
        let negative = self.eat(&Tok::Minus);
        let span = self.span();
        match self.bump() {
            Tok::Number(text) => {
                let v: BigInt = text
                    .parse()
                    .map_err(|_| FrontendError::syntax(span, format!("`{}` is not an integer", text)))?;
                Ok(if negative { -v } else { v })
            }
            t => Err(FrontendError::syntax(
                span,
                format!("expected integer, found {}", t.describe()),
            )),
        }
    }

    fn block(&mut self) -> PResult<Stmt> {
        let span = self.span();
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while self.peek() != &Tok::RBrace {
            if self.peek() == &Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            if self.eat(&Tok::Semi) {
                continue;
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Stmt::block(stmts, span))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LBrace => {
                let left = self.block()?;
                if !self.eat(&Tok::LBracket) {
                    return Ok(left);
                }
                if self.eat(&Tok::RBracket) {
                    let right = self.block()?;
                    return Ok(Stmt::new(
                        StmtKind::Nondet {
                            left: Box::new(left),
                            right: Box::new(right),
                        },
                        span,
                    ));
                }
                let weight = self.weight_sum()?;
                self.expect(Tok::RBracket)?;
                let right = self.block()?;
                Ok(Stmt::new(
                    StmtKind::Prob {
                        left: Box::new(left),
                        weight,
                        right: Box::new(right),
                    },
                    span,
                ))
            }
            Tok::Ident(kw) => match kw.as_str() {
                "skip" => {
                    self.bump();
                    self.expect(Tok::Semi)?;
                    Ok(Stmt::new(StmtKind::Skip, span))
                }
                "abort" => {
                    self.bump();
                    self.expect(Tok::Semi)?;
                    Ok(Stmt::new(StmtKind::Abort, span))
                }
                "observe" => {
                    self.bump();
                    let cond = self.condition()?;
                    self.expect(Tok::Semi)?;
                    Ok(Stmt::new(StmtKind::Observe(cond), span))
                }
                "if" => self.if_stmt(),
                "while" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let cond = self.condition()?;
                    self.expect(Tok::RParen)?;
                    let body = self.block()?;
                    Ok(Stmt::new(
                        StmtKind::While {
                            cond,
                            body: Box::new(body),
                        },
                        span,
                    ))
                }
                "int" => Err(FrontendError::syntax(
                    span,
                    "declarations must precede all statements",
                )),
                _ => self.assignment(),
            },
            _ => Err(self.unexpected("statement")),
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        self.bump();
        self.expect(Tok::LParen)?;
        let cond = self.condition()?;
        self.expect(Tok::RParen)?;
        let then_branch = self.block()?;
        let else_branch = if self.is_keyword("else") {
            self.bump();
            if self.is_keyword("if") {
                let inner_span = self.span();
                let inner = self.if_stmt()?;
                Stmt::block(vec![inner], inner_span)
            } else {
                self.block()?
            }
        } else {
            Stmt::block(Vec::new(), span)
        };
        Ok(Stmt::new(
            StmtKind::If {
                cond,
                then_branch: Box::new(then_branch),
                else_branch: Box::new(else_branch),
            },
            span,
        ))
    }

    fn assignment(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let var = self.ident()?;
        self.expect(Tok::Assign)?;
        let kind = if self.is_keyword("unif") && self.peek_at(1) == &Tok::LParen {
            self.bump();
            self.bump();
            let lo = self.arith()?;
            self.expect(Tok::Comma)?;
            let hi = self.arith()?;
            self.expect(Tok::RParen)?;
            StmtKind::Uniform { var, lo, hi }
        } else {
            StmtKind::Assign {
                var,
                expr: self.arith()?,
            }
        };
        self.expect(Tok::Semi)?;
        Ok(Stmt::new(kind, span))
    }

    // ---- probability annotations -------------------------------------

    fn weight_sum(&mut self) -> PResult<Polynomial> {
        let mut acc = self.weight_product()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = &acc + &self.weight_product()?;
            } else if self.eat(&Tok::Minus) {
                acc = &acc - &self.weight_product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn weight_product(&mut self) -> PResult<Polynomial> {
        let mut acc = self.weight_unary()?;
        loop {
            if self.eat(&Tok::Star) {
                acc = &acc * &self.weight_unary()?;
            } else if self.peek() == &Tok::Slash {
                let span = self.span();
                self.bump();
                let d = self.weight_unary()?;
                match d.constant_value() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&(Rational::one() / c)),
                    Some(_) => return Err(FrontendError::syntax(span, "division by zero")),
                    None => {
                        return Err(FrontendError::syntax(
                            span,
                            "probabilities must be polynomials: divisor is not a constant",
                        ))
                    }
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn weight_unary(&mut self) -> PResult<Polynomial> {
        if self.eat(&Tok::Minus) {
            return Ok(-&self.weight_unary()?);
        }
        let base = self.weight_atom()?;
        if self.eat(&Tok::Caret) {
            let span = self.span();
            match self.bump() {
                Tok::Number(t) => {
                    let e: u32 = t
                        .parse()
                        .map_err(|_| FrontendError::syntax(span, "exponent must be a natural number"))?;
                    Ok(base.pow(e))
                }
                t => Err(FrontendError::syntax(
                    span,
                    format!("expected exponent, found {}", t.describe()),
                )),
            }
        } else {
            Ok(base)
        }
    }

    fn weight_atom(&mut self) -> PResult<Polynomial> {
        let span = self.span();
        match self.bump() {
            Tok::Number(text) => parse_rational(&text)
                .map(Polynomial::constant)
                .ok_or_else(|| FrontendError::syntax(span, format!("bad number `{}`", text))),
            Tok::Ident(name) if !is_reserved(&name) => Ok(Polynomial::var(&name)),
            Tok::LParen => {
                let p = self.weight_sum()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            t => Err(FrontendError::syntax(
                span,
                format!("expected probability, found {}", t.describe()),
            )),
        }
    }

    // ---- expressions ------------------------------------------------

    pub(crate) fn condition(&mut self) -> PResult<BExpr> {
        let span = self.span();
        match self.or_expr()? {
            Expr::Bool { expr, .. } => Ok(expr),
            Expr::Arith(_) => Err(FrontendError::syntax(span, "expected a condition")),
        }
    }

    pub(crate) fn arith(&mut self) -> PResult<AExpr> {
        let span = self.span();
        match self.or_expr()? {
            Expr::Arith(a) => Ok(a),
            Expr::Bool { .. } => Err(FrontendError::syntax(span, "expected an arithmetic expression")),
        }
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let first = self.and_expr()?;
        if self.peek() != &Tok::Pipe {
            return Ok(first);
        }
        let mut acc = or_operand(first, span)?;
        while self.peek() == &Tok::Pipe {
            let span = self.span();
            self.bump();
            let rhs = or_operand(self.and_expr()?, span)?;
            acc = BExpr::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(Expr::Bool {
            expr: acc,
            chained_and: false,
        })
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let first = self.not_expr()?;
        if self.peek() != &Tok::Amp {
            return Ok(first);
        }
        let mut acc = as_bool(first, span)?;
        while self.peek() == &Tok::Amp {
            let span = self.span();
            self.bump();
            let rhs = as_bool(self.not_expr()?, span)?;
            acc = BExpr::And(Box::new(acc), Box::new(rhs));
        }
        Ok(Expr::Bool {
            expr: acc,
            chained_and: true,
        })
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat(&Tok::Bang) {
            let inner = as_bool(self.not_expr()?, span)?;
            return Ok(Expr::Bool {
                expr: BExpr::Not(Box::new(inner)),
                chained_and: false,
            });
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rspan = self.span();
        let rhs = self.add_expr()?;
        Ok(Expr::Bool {
            expr: BExpr::Cmp(op, as_arith(lhs, span)?, as_arith(rhs, rspan)?),
            chained_and: false,
        })
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let first = self.mul_expr()?;
        if !matches!(self.peek(), Tok::Plus | Tok::Minus) {
            return Ok(first);
        }
        let mut acc = as_arith(first, span)?;
        loop {
            let span = self.span();
            if self.eat(&Tok::Plus) {
                let rhs = as_arith(self.mul_expr()?, span)?;
                acc = AExpr::Add(Box::new(acc), Box::new(rhs));
            } else if self.eat(&Tok::Minus) {
                let rhs = as_arith(self.mul_expr()?, span)?;
                acc = AExpr::Sub(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(Expr::Arith(acc));
            }
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let first = self.unary_expr()?;
        if self.peek() != &Tok::Star {
            if self.peek() == &Tok::Slash {
                return Err(FrontendError::syntax(
                    self.span(),
                    "division is not supported in program expressions",
                ));
            }
            return Ok(first);
        }
        let mut acc = as_arith(first, span)?;
        while self.peek() == &Tok::Star {
            let span = self.span();
            self.bump();
            let rhs = as_arith(self.unary_expr()?, span)?;
            acc = AExpr::Mul(Box::new(acc), Box::new(rhs));
        }
        Ok(Expr::Arith(acc))
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat(&Tok::Minus) {
            let inner = as_arith(self.unary_expr()?, span)?;
            return Ok(Expr::Arith(AExpr::Neg(Box::new(inner))));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.bump() {
            Tok::Number(text) => {
                let v: BigInt = text.parse().map_err(|_| {
                    FrontendError::syntax(span, format!("`{}`: program values are integers", text))
                })?;
                Ok(Expr::Arith(AExpr::Int(v)))
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => Ok(Expr::Bool {
                    expr: BExpr::Const(true),
                    chained_and: false,
                }),
                "false" => Ok(Expr::Bool {
                    expr: BExpr::Const(false),
                    chained_and: false,
                }),
                _ if is_reserved(&name) => Err(FrontendError::syntax(
                    span,
                    format!("unexpected keyword `{}`", name),
                )),
                _ => Ok(Expr::Arith(AExpr::Var(name))),
            },
            Tok::LParen => {
                let inner = self.or_expr()?;
                self.expect(Tok::RParen)?;
                Ok(match inner {
                    Expr::Bool { expr, .. } => Expr::Bool {
                        expr,
                        chained_and: false,
                    },
                    a => a,
                })
            }
            t => Err(FrontendError::syntax(
                span,
                format!("expected expression, found {}", t.describe()),
            )),
        }
    }

    // ---- properties -------------------------------------------------

    pub(crate) fn property(&mut self) -> PResult<Property> {
        let mut mode = None;
        if self.is_keyword("min") {
            self.bump();
            mode = Some(OptMode::Min);
        } else if self.is_keyword("max") {
            self.bump();
            mode = Some(OptMode::Max);
        }
        let span = self.span();
        let kind = match self.bump() {
            Tok::Ident(k) if k == "P" => PropertyKind::Probability,
            Tok::Ident(k) if k == "E" => PropertyKind::Expectation,
            t => {
                return Err(FrontendError::property(format!(
                    "{}: expected `P` or `E`, found {}",
                    span,
                    t.describe()
                )))
            }
        };
        let span = self.span();
        let comparison = match self.bump() {
            Tok::Lt => Comparison::Lt,
            Tok::Le => Comparison::Le,
            Tok::Gt => Comparison::Gt,
            Tok::Ge => Comparison::Ge,
            t => {
                return Err(FrontendError::property(format!(
                    "{}: malformed comparison {}",
                    span,
                    t.describe()
                )))
            }
        };
        let threshold = self.threshold()?;
        self.expect(Tok::LBracket)?;
        let objective = match kind {
            PropertyKind::Probability => Objective::Probability(self.condition()?),
            PropertyKind::Expectation => Objective::Expectation(self.arith()?),
        };
        self.expect(Tok::RBracket)?;
        if self.peek() != &Tok::Eof {
            return Err(self.unexpected("end of property"));
        }
        match kind {
            PropertyKind::Expectation if threshold.is_negative() => {
                return Err(FrontendError::property("expectation threshold must be nonnegative"))
            }
            PropertyKind::Probability if threshold.is_negative() || threshold > Rational::one() => {
                return Err(FrontendError::property("probability threshold must lie in [0,1]"))
            }
            _ => {}
        }
        let mode = mode.unwrap_or(if comparison.is_lower_bound() {
            OptMode::Min
        } else {
            OptMode::Max
        });
        Ok(Property {
            objective,
            comparison,
            threshold,
            mode,
        })
    }

    fn threshold(&mut self) -> PResult<Rational> {
        let negative = self.eat(&Tok::Minus);
        let span = self.span();
        let mut text = match self.bump() {
            Tok::Number(t) => t,
            t => {
                return Err(FrontendError::property(format!(
                    "{}: expected threshold, found {}",
                    span,
                    t.describe()
                )))
            }
        };
        if self.eat(&Tok::Slash) {
            match self.bump() {
                Tok::Number(d) => {
                    text.push('/');
                    text.push_str(&d);
                }
                t => {
                    return Err(FrontendError::property(format!(
                        "expected denominator, found {}",
                        t.describe()
                    )))
                }
            }
        }
        let v = parse_rational(&text)
            .ok_or_else(|| FrontendError::property(format!("bad threshold `{}`", text)))?;
        Ok(if negative { -v } else { v })
    }
}

fn as_bool(e: Expr, span: Span) -> PResult<BExpr> {
    match e {
        Expr::Bool { expr, .. } => Ok(expr),
        Expr::Arith(_) => Err(FrontendError::syntax(span, "expected a condition")),
    }
}

fn or_operand(e: Expr, span: Span) -> PResult<BExpr> {
    match e {
        Expr::Bool {
            chained_and: true, ..
        } => Err(FrontendError::syntax(
            span,
            "mixing `&` and `|` requires explicit parentheses",
        )),
        e => as_bool(e, span),
    }
}

fn as_arith(e: Expr, span: Span) -> PResult<AExpr> {
    match e {
        Expr::Arith(a) => Ok(a),
        Expr::Bool { .. } => Err(FrontendError::syntax(span, "expected an arithmetic expression")),
    }
}

fn is_reserved(word: &str) -> bool {
    matches!(
        word,
        "int" | "skip" | "abort" | "if" | "else" | "while" | "observe" | "true" | "false"
    )
}

fn tok_text(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Number(s) => s.clone(),
        other => other.describe().trim_matches('`').to_string(),
    }
}
