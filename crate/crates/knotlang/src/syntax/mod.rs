//! Concrete syntax: lexer, parsers, and printers for both languages.

pub mod ast;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use ast::{ProjIdx, Span, TargetTerm, TargetTermKind, TargetType, Term, TermKind, Type};
pub use parser::{parse_source, parse_target, parse_target_type, parse_type};
pub use pretty::{pretty_target_term, pretty_target_type, pretty_term, pretty_type};

/// Rejection by the lexer or parser, with position and expectation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub fn at(span: Span, expected: Vec<String>, found: String) -> Self {
        ParseError {
            span,
            expected,
            found,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: parse error: expected {}, found {}",
            self.span.line,
            self.span.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for ParseError {}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_type(self))
    }
}

impl fmt::Display for TargetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_target_type(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_round_trips_through_the_printer() {
        for src in [
            "lam x : Nat . x",
            "lam[2] x : Nat -> Nat . x 3",
            "let r = new 0 in r := 1; !r",
            "<proj1 p, proj2 p>",
            "(lam x : Ref (Nat ->[1] Nat) . !x) (new (lam y : Nat . y))",
            "f (g x) y",
        ] {
            let e = parse_source(src).unwrap();
            let printed = pretty_term(&e);
            assert_eq!(parse_source(&printed).unwrap(), e, "via {printed}");
        }
    }

    #[test]
    fn target_round_trips_through_the_printer() {
        for src in [
            "pack <Unit, <lam x : Nat . lam env : Unit . x, unit>> as exists a : Type 0 . <Nat -> a -> Nat x a>",
            "unpack <a, p> = f in proj1 p x proj2 p",
            "lam x : Nat . (lam y : Nat . y)",
        ] {
            let e = parse_target(src).unwrap();
            let printed = pretty_target_term(&e);
            assert_eq!(parse_target(&printed).unwrap(), e, "via {printed}");
        }
    }

    #[test]
    fn consecutive_lambdas_form_one_code_block() {
        let e = parse_target("lam x : Nat . lam env : Unit . x").unwrap();
        match &e.kind {
            TargetTermKind::CodeLam { params, .. } => assert_eq!(params.len(), 2),
            other => panic!("expected code, got {other:?}"),
        }
    }

    #[test]
    fn nonexistent_projections_are_parse_errors() {
        for src in ["proj3 x", "proj0 x", "let y = proj12 p in y"] {
            assert!(parse_source(src).is_err(), "{src} should not parse");
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_source("lam x : Nat ,").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 13));
        let err = parse_source("let x = 1 in\n  proj3 x").unwrap_err();
        assert_eq!(err.span.line, 2);
    }

    #[test]
    fn comments_and_whitespace_are_skipped() {
        let e = parse_source("-- leading note\n  5 -- trailing\n").unwrap();
        assert_eq!(e, Term::nat(5));
    }

    #[test]
    fn types_round_trip_with_and_without_levels() {
        for src in [
            "Nat -> Nat",
            "Nat ->[0] Nat",
            "Ref (Nat ->[1] Nat)",
            "<Nat x Ref Unit> ->[2] Unit",
            "Nat -> Nat -> Nat",
        ] {
            let t = parse_type(src).unwrap();
            assert_eq!(parse_type(&pretty_type(&t)).unwrap(), t);
        }
        let t = parse_type("Nat -> Nat -> Nat").unwrap();
        // arrows associate to the right
        assert!(matches!(
            &t,
            Type::Arrow { cod, .. } if matches!(**cod, Type::Arrow { .. })
        ));
    }

    #[test]
    fn target_types_round_trip() {
        for src in [
            "exists a : Type 0 . <Nat -> a -> Nat x a>",
            "Ref (exists a : Type 1 . <Nat -> a -> Nat x a>)",
            "exists a : Type 0 . exists b : Type 1 . <a x b>",
        ] {
            let t = parse_target_type(src).unwrap();
            assert_eq!(parse_target_type(&pretty_target_type(&t)).unwrap(), t);
        }
    }

    #[test]
    fn free_vars_matches_a_naive_recursion() {
        fn naive(e: &Term, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match &e.kind {
                TermKind::Var(x) => {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                }
                TermKind::Nat(_) | TermKind::Unit => {}
                TermKind::Lam { param, body, .. } => {
                    bound.push(param.clone());
                    naive(body, bound, out);
                    bound.pop();
                }
                TermKind::Let { name, bound: b, body } => {
                    naive(b, bound, out);
                    bound.push(name.clone());
                    naive(body, bound, out);
                    bound.pop();
                }
                TermKind::New(a) | TermKind::Deref(a) | TermKind::Proj(_, a) => {
                    naive(a, bound, out)
                }
                TermKind::App(a, b)
                | TermKind::Assign(a, b)
                | TermKind::Seq(a, b)
                | TermKind::Pair(a, b) => {
                    naive(a, bound, out);
                    naive(b, bound, out);
                }
            }
        }
        for src in [
            "lam x : Nat . f (g x)",
            "let x = y in <x, lam y : Nat . x>",
            "r := f; f 0",
        ] {
            let e = parse_source(src).unwrap();
            let mut out = Vec::new();
            naive(&e, &mut Vec::new(), &mut out);
            out.sort();
            let got: Vec<String> = e.free_vars().into_iter().collect();
            assert_eq!(got, out, "{src}");
        }
    }
}
