use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Signed};

use super::ast::*;
use super::FrontendError;
use crate::Rational;

/// Checks the static well-formedness rules of a parsed program and
/// recollects its parameter set.
pub fn validate(mut program: Program) -> Result<Program, FrontendError> {
    let mut errors = Vec::new();
    let mut declared = HashSet::new();
    for d in &program.decls {
        if !declared.insert(d.name.as_str()) {
            errors.push(FrontendError::DuplicateDeclaration {
                name: d.name.clone(),
                span: d.span,
            });
        }
    }

    let mut params = BTreeSet::new();
    program.body.walk(&mut |s| {
        let mut used = Vec::new();
        match &s.kind {
            StmtKind::Assign { var, expr } => {
                used.push(var.as_str());
                expr.vars(&mut used);
            }
            StmtKind::Uniform { var, lo, hi } => {
                used.push(var.as_str());
                lo.vars(&mut used);
                hi.vars(&mut used);
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::Observe(cond) => {
                cond.vars(&mut used)
            }
            StmtKind::Prob { weight, .. } => {
                for p in weight.variables() {
                    if declared.contains(p.as_str()) {
                        errors.push(FrontendError::ParameterIsVariable {
                            name: p.clone(),
                            span: s.span,
                        });
                    }
                    params.insert(p);
                }
                if let Some(c) = weight.constant_value() {
                    if c.is_negative() || c > Rational::one() {
                        errors.push(FrontendError::ProbabilityOutOfRange {
                            value: c.to_string(),
                            span: s.span,
                        });
                    }
                }
            }
            _ => {}
        }
        for v in used {
            if !declared.contains(v) {
                errors.push(FrontendError::UndeclaredVariable {
                    name: v.to_string(),
                    span: s.span,
                });
            }
        }
    });

    match errors.len() {
        0 => {
            program.params = params;
            Ok(program)
        }
        1 => Err(errors.pop().unwrap()),
        _ => Err(FrontendError::Multiple(errors)),
    }
}

/// Checks that a property only mentions declared variables.
pub fn check_property(program: &Program, property: &Property) -> Result<(), FrontendError> {
    let mut used = Vec::new();
    match &property.objective {
        Objective::Probability(g) => g.vars(&mut used),
        Objective::Expectation(e) => e.vars(&mut used),
    }
    for v in used {
        if !program.decls.iter().any(|d| d.name == v) {
            return Err(FrontendError::property(format!(
                "undeclared variable {} in property",
                v
            )));
        }
    }
    Ok(())
}
