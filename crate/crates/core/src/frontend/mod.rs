//! Lexing, parsing, validation and printing of cpGCL programs and of
//! property specifications.
//!
//! Concrete syntax (C-like):
//!
//! ```text
//! int x := 0;                      // declarations first; default value 0
//! x := x + 1;                      // assignment (+, -, * over integers)
//! x := unif(0, 4);                 // uniform choice from a closed interval
//! { x := 1; } [0.091] { skip; }    // probabilistic choice, weight may use parameters
//! { x := 1; } [] { x := 2; }       // nondeterministic choice
//! if (x = 0 | y > 2) { .. } else { .. }
//! while (!(c = 1)) { .. }
//! observe(x != y & y != z);
//! ```
//!
//! `!` binds tighter than `&`, which binds tighter than `|`; an
//! unparenthesized mix of `&` and `|` is rejected.

mod ast;
mod lexer;
mod parser;
mod printer;
mod validate;

use thiserror::Error;

pub use ast::*;
pub use validate::{check_property, validate};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FrontendError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },
    #[error("{span}: undeclared variable {name}")]
    UndeclaredVariable { name: String, span: Span },
    #[error("{span}: duplicate declaration of {name}")]
    DuplicateDeclaration { name: String, span: Span },
    #[error("{span}: probability {value} out of range [0,1]")]
    ProbabilityOutOfRange { value: String, span: Span },
    #[error("{span}: {name} is a program variable and cannot be used as a parameter")]
    ParameterIsVariable { name: String, span: Span },
    #[error("invalid property: {0}")]
    Property(String),
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Multiple(Vec<FrontendError>),
}

impl FrontendError {
    pub(crate) fn syntax(span: Span, message: impl Into<String>) -> Self {
        FrontendError::Syntax {
            span,
            message: message.into(),
        }
    }

    pub(crate) fn property(message: impl Into<String>) -> Self {
        FrontendError::Property(message.into())
    }
}

/// Parses and validates a program.
pub fn parse_program(source: &str) -> Result<Program, FrontendError> {
    let program = parser::Parser::new(source)?.program()?;
    validate(program)
}

/// Parses without the static checks of [`validate`].
pub fn parse_program_unchecked(source: &str) -> Result<Program, FrontendError> {
    parser::Parser::new(source)?.program()
}

/// Parses `[min|max] P <cmp> <threshold> [ <condition> ]` or
/// `[min|max] E <cmp> <threshold> [ <expression> ]`.
pub fn parse_property(text: &str) -> Result<Property, FrontendError> {
    parser::Parser::new(text)
        .map_err(|e| FrontendError::Property(e.to_string()))?
        .property()
        .map_err(|e| match e {
            FrontendError::Property(_) => e,
            other => FrontendError::Property(other.to_string()),
        })
}

/// Reads a `.props` sidecar: one property per line, blank lines and `//`
/// comments ignored.
pub fn parse_property_file(text: &str) -> Result<Vec<Property>, FrontendError> {
    text.lines()
        .map(|l| l.split("//").next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_property)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametric::Polynomial;
    use crate::Rational;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn stmts(p: &Program) -> &[Stmt] {
        match &p.body.kind {
            StmtKind::Block(s) => s,
            _ => panic!("body is a block"),
        }
    }

    #[test]
    fn minimal_program() {
        let p = parse_program("int x := 0; x := x + 1;").unwrap();
        assert_eq!(p.decls.len(), 1);
        assert_eq!(p.decls[0].init, BigInt::from(0));
        assert_eq!(stmts(&p).len(), 1);
        assert!(matches!(
            &stmts(&p)[0].kind,
            StmtKind::Assign { var, expr: AExpr::Add(..) } if var == "x"
        ));
    }

    #[test]
    fn decimal_weight_is_exact() {
        let p = parse_program("int x := 0; { x := 1; } [0.091] { skip; }").unwrap();
        match &stmts(&p)[0].kind {
            StmtKind::Prob { weight, .. } => {
                assert_eq!(weight, &Polynomial::constant(q(91, 1000)))
            }
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn undeclared_variable_reported() {
        let err = parse_program("int x := 0;\nx := y;").unwrap_err();
        assert!(err.to_string().contains("undeclared variable y"), "{}", err);
        assert!(err.to_string().starts_with("2:1"), "{}", err);
    }

    #[test]
    fn duplicate_declaration_reported() {
        let err = parse_program("int x := 0; int x := 1; skip;").unwrap_err();
        assert!(matches!(err, FrontendError::DuplicateDeclaration { .. }));
    }

    #[test]
    fn probability_out_of_range() {
        let err = parse_program("{skip;}[1.5]{skip;}").unwrap_err();
        assert!(matches!(err, FrontendError::ProbabilityOutOfRange { .. }), "{}", err);
        assert!(parse_program("{skip;}[0-1/2]{skip;}").is_err());
        assert!(parse_program("{skip;}[1]{skip;}").is_ok());
    }

    #[test]
    fn parameters_are_collected() {
        let p = parse_program("int x := 0; { x := 1; } [b] { { x := 2; } [f] { skip; } }").unwrap();
        let names: Vec<_> = p.params.iter().cloned().collect();
        assert_eq!(names, vec!["b".to_string(), "f".to_string()]);
    }

    #[test]
    fn variable_in_weight_is_rejected() {
        let err = parse_program("int x := 0; { skip; } [x] { skip; }").unwrap_err();
        assert!(matches!(err, FrontendError::ParameterIsVariable { .. }));
    }

    #[test]
    fn mixing_and_or_needs_parentheses() {
        assert!(parse_program("int a; int b; observe(a = 1 & b = 1 | a = 2);").is_err());
        assert!(parse_program("int a; int b; observe(a = 1 | b = 1 & a = 2);").is_err());
        assert!(parse_program("int a; int b; observe((a = 1 & b = 1) | a = 2);").is_ok());
        assert!(parse_program("int a; int b; observe(a = 1 & (b = 1 | a = 2));").is_ok());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_program("int x := 0;\nwhile (x < 3 {\n}").unwrap_err();
        assert!(err.to_string().starts_with("2:"), "{}", err);
        assert!(parse_program("x := 1 / 2;").is_err());
        assert!(parse_program("int x; x := 0.5;").is_err());
    }

    #[test]
    fn else_if_chains_parse() {
        let src = "int x; if (x = 0) { x := 1; } else if (x = 1) { x := 2; } else { skip; }";
        let p = parse_program(src).unwrap();
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn property_examples() {
        let p = parse_property("P >= 0.5 [ true ]").unwrap();
        assert_eq!(p.kind(), PropertyKind::Probability);
        assert_eq!(p.threshold, q(1, 2));
        assert_eq!(p.mode, OptMode::Min);
        assert_eq!(p.objective, Objective::Probability(BExpr::Const(true)));

        let e = parse_property("E >= 1.6 [ x ]").unwrap();
        assert_eq!(e.threshold, q(8, 5));
        assert_eq!(e.objective, Objective::Expectation(AExpr::Var("x".into())));

        let c = parse_property("P >= 0.29 [ observeSender > 6 ]").unwrap();
        assert_eq!(c.threshold, q(29, 100));

        let up = parse_property("P <= 1/2 [ x > 1 ]").unwrap();
        assert_eq!(up.mode, OptMode::Max);
        assert_eq!(up.threshold, q(1, 2));
        assert_eq!(parse_property("min P <= 0.5 [ true ]").unwrap().mode, OptMode::Min);
        assert_eq!(parse_property("P >= 3.4e-3 [ true ]").unwrap().threshold, q(34, 10000));
    }

    #[test]
    fn property_errors() {
        assert!(matches!(parse_property("P => 0.5 [ true ]"), Err(FrontendError::Property(_))));
        assert!(parse_property("P = 0.5 [ true ]").is_err());
        assert!(parse_property("E >= -1 [ x ]").is_err());
        assert!(parse_property("P >= 1.5 [ true ]").is_err());
        assert!(parse_property("P >= 0.5 [ x + 1 ]").is_err());
        assert!(parse_property("E >= 1 [ x > 1 ]").is_err());
        assert!(parse_property("P >= 0.5 [ true ] extra").is_err());
    }

    #[test]
    fn property_round_trip() {
        for text in ["P >= 1/2 [ true ]", "max E > 3 [ x * 2 ]", "P < 29/100 [ !(a = 1) ]"] {
            let p = parse_property(text).unwrap();
            assert_eq!(parse_property(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn props_file_skips_comments() {
        let ps = parse_property_file("// header\nP >= 0.5 [ true ]\n\nE >= 1 [ x ] // trailing\n").unwrap();
        assert_eq!(ps.len(), 2);
    }
}
