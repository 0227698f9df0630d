//! Pretty-printer producing source that parses back to the same tree.

use std::fmt::{self, Write};

use super::ast::*;

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for d in &self.decls {
            writeln!(out, "int {} := {};", d.name, d.init)?;
        }
        match &self.body.kind {
            StmtKind::Block(stmts) => {
                for s in stmts {
                    write_stmt(&mut out, s, 0)?;
                }
            }
            _ => write_stmt(&mut out, &self.body, 0)?,
        }
        f.write_str(&out)
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_stmt(&mut out, self, 0)?;
        f.write_str(out.trim_end())
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_braced(out: &mut String, s: &Stmt, depth: usize) -> fmt::Result {
    out.push_str("{\n");
    match &s.kind {
        StmtKind::Block(stmts) => {
            for inner in stmts {
                write_stmt(out, inner, depth + 1)?;
            }
        }
        _ => write_stmt(out, s, depth + 1)?,
    }
    indent(out, depth);
    out.push('}');
    Ok(())
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) -> fmt::Result {
    indent(out, depth);
    match &s.kind {
        StmtKind::Skip => out.push_str("skip;"),
        StmtKind::Abort => out.push_str("abort;"),
        StmtKind::Assign { var, expr } => write!(out, "{} := {};", var, expr)?,
        StmtKind::Uniform { var, lo, hi } => write!(out, "{} := unif({}, {});", var, lo, hi)?,
        StmtKind::Block(_) => write_braced(out, s, depth)?,
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            write!(out, "if ({}) ", cond)?;
            write_braced(out, then_branch, depth)?;
            if !else_branch.is_empty_block() {
                out.push_str(" else ");
                write_braced(out, else_branch, depth)?;
            }
        }
        StmtKind::Prob {
            left,
            weight,
            right,
        } => {
            write_braced(out, left, depth)?;
            write!(out, " [{}] ", weight)?;
            write_braced(out, right, depth)?;
        }
        StmtKind::Nondet { left, right } => {
            write_braced(out, left, depth)?;
            out.push_str(" [] ");
            write_braced(out, right, depth)?;
        }
        StmtKind::While { cond, body } => {
            write!(out, "while ({}) ", cond)?;
            write_braced(out, body, depth)?;
        }
        StmtKind::Observe(cond) => write!(out, "observe({});", cond)?,
    }
    out.push('\n');
    Ok(())
}

fn arith_prec(e: &AExpr) -> u8 {
    match e {
        AExpr::Add(..) | AExpr::Sub(..) => 1,
        AExpr::Mul(..) => 2,
        AExpr::Neg(..) => 3,
        AExpr::Int(_) | AExpr::Var(_) => 4,
    }
}

fn write_arith(f: &mut fmt::Formatter<'_>, e: &AExpr, min_prec: u8) -> fmt::Result {
    let parens = arith_prec(e) < min_prec;
    if parens {
        f.write_str("(")?;
    }
    match e {
        AExpr::Int(v) => write!(f, "{}", v)?,
        AExpr::Var(v) => f.write_str(v)?,
        AExpr::Add(a, b) => {
            write_arith(f, a, 1)?;
            f.write_str(" + ")?;
            write_arith(f, b, 2)?;
        }
        AExpr::Sub(a, b) => {
            write_arith(f, a, 1)?;
            f.write_str(" - ")?;
            write_arith(f, b, 2)?;
        }
        AExpr::Mul(a, b) => {
            write_arith(f, a, 2)?;
            f.write_str(" * ")?;
            write_arith(f, b, 3)?;
        }
        AExpr::Neg(a) => {
            f.write_str("-")?;
            write_arith(f, a, 3)?;
        }
    }
    if parens {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for AExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_arith(f, self, 0)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum BoolCtx {
    Top,
    OrLeft,
    OrRight,
    AndLeft,
    AndRight,
    Not,
}

fn write_bool(f: &mut fmt::Formatter<'_>, e: &BExpr, ctx: BoolCtx) -> fmt::Result {
    let parens = match e {
        BExpr::Or(..) => !matches!(ctx, BoolCtx::Top | BoolCtx::OrLeft),
        BExpr::And(..) => !matches!(ctx, BoolCtx::Top | BoolCtx::AndLeft),
        BExpr::Cmp(..) => ctx == BoolCtx::Not,
        BExpr::Not(_) | BExpr::Const(_) => false,
    };
    if parens {
        f.write_str("(")?;
    }
    match e {
        BExpr::Const(b) => write!(f, "{}", b)?,
        BExpr::Cmp(op, a, b) => write!(f, "{} {} {}", a, op.symbol(), b)?,
        BExpr::Not(a) => {
            f.write_str("!")?;
            write_bool(f, a, BoolCtx::Not)?;
        }
        BExpr::And(a, b) => {
            write_bool(f, a, BoolCtx::AndLeft)?;
            f.write_str(" & ")?;
            write_bool(f, b, BoolCtx::AndRight)?;
        }
        BExpr::Or(a, b) => {
            write_bool(f, a, BoolCtx::OrLeft)?;
            f.write_str(" | ")?;
            write_bool(f, b, BoolCtx::OrRight)?;
        }
    }
    if parens {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for BExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bool(f, self, BoolCtx::Top)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let default_mode = if self.comparison.is_lower_bound() {
            OptMode::Min
        } else {
            OptMode::Max
        };
        if self.mode != default_mode {
            write!(f, "{} ", self.mode)?;
        }
        match &self.objective {
            Objective::Probability(g) => write!(
                f,
                "P {} {} [ {} ]",
                self.comparison.symbol(),
                self.threshold,
                g
            ),
            Objective::Expectation(e) => write!(
                f,
                "E {} {} [ {} ]",
                self.comparison.symbol(),
                self.threshold,
                e
            ),
        }
    }
}
