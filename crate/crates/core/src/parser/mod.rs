//! Concrete syntax. The grammar is documented in `docs/grammar.md`.

mod grammar;
mod lexer;
mod pretty;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::desugar::desugar;
use crate::syntax::surface::SurfaceTerm;
use crate::syntax::{Term, TypeExpr, Var};

pub use pretty::{pretty_defs, pretty_surface, pretty_term, pretty_type, pretty_value};

/// 1-based line and column.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    fn start() -> Pos {
        Pos { line: 1, col: 1 }
    }

    fn advance(&mut self, c: char) {
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: Pos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{pos}: unbound variable `{var}`")]
    Scope { var: Var, pos: Pos },
    #[error("{pos}: location literals cannot appear in source programs")]
    LocationLiteral { pos: Pos },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::Scope { pos, .. }
            | ParseError::LocationLiteral { pos } => *pos,
        }
    }
}

/// Parses a closed surface term.
pub fn parse(src: &str) -> Result<SurfaceTerm, ParseError> {
    parse_with_scope(src, &[])
}

/// Parses a surface term whose free variables must be among `scope`.
pub fn parse_with_scope(src: &str, scope: &[Var]) -> Result<SurfaceTerm, ParseError> {
    let toks = lexer::lex(src)?;
    let mut p = grammar::Parser::new(toks, scope.to_vec());
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses and desugars a closed program.
pub fn parse_program(src: &str) -> Result<Term, ParseError> {
    parse(src).map(|s| desugar(&s))
}

pub fn parse_type(src: &str, scope: &[Var]) -> Result<TypeExpr, ParseError> {
    let toks = lexer::lex(src)?;
    let mut p = grammar::Parser::new(toks, scope.to_vec());
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Binding, TypeExpr as T};

    fn core(src: &str) -> Term {
        parse_program(src).unwrap_or_else(|e| panic!("{src}: {e}"))
    }

    #[test]
    fn id_ref_prefix() {
        let t = core("let id = lambda(x: Top) x in ref id (all(x:Top)Top)");
        let expected = Term::let_in(
            "id",
            Term::lambda("x", T::Top, Term::var("x")),
            Term::RefNew(Var::new("id"), T::all("x", T::Top, T::Top)),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn definition_syntax_in_type_rejected() {
        assert!(matches!(
            parse("nu(a: {A = Top})"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn unbound_deref() {
        match parse("!r") {
            Err(ParseError::Scope { var, pos }) => {
                assert_eq!(var, Var::new("r"));
                assert_eq!(pos, Pos { line: 1, col: 2 });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn location_literal_rejected() {
        let e = parse("let x = <loc 0> in x").unwrap_err();
        assert!(matches!(e, ParseError::LocationLiteral { .. }));
        assert_eq!(
            pretty_value(&crate::syntax::Value::Loc(crate::syntax::Loc(3))),
            "<loc 3>"
        );
    }

    #[test]
    fn reserved_names_rejected() {
        assert!(parse("lambda(%0: Top) %0").is_err());
    }

    #[test]
    fn type_sugar() {
        let s = [Var::new("y")];
        assert_eq!(
            parse_type("{A}", &s).unwrap(),
            T::member("A", T::Bot, T::Top)
        );
        assert_eq!(
            parse_type("{A: Top}", &s).unwrap(),
            T::member("A", T::Top, T::Top)
        );
        assert_eq!(
            parse_type("{A <: y.B}", &s).unwrap(),
            T::member("A", T::Bot, T::sel("y", "B"))
        );
        assert_eq!(
            parse_type("{a: Top; B: Bot..Top}", &s).unwrap(),
            T::and(T::field("a", T::Top), T::member("B", T::Bot, T::Top))
        );
        assert_eq!(pretty_type(&T::Top), "Top");
    }

    #[test]
    fn ascribed_object_sugar() {
        let a = core("nu(s) {a = s} : {a: Top}");
        let b = core("nu(s: {a: Top}) {a = s}");
        assert_eq!(a, b);
    }

    #[test]
    fn precedence() {
        let s = parse_with_scope("!r.a", &[Var::new("r")]).unwrap();
        assert!(matches!(s, SurfaceTerm::Sel(ref t, _) if matches!(**t, SurfaceTerm::Deref(_))));
        let s =
            parse_with_scope("f x y := z; w", &["f", "x", "y", "z", "w"].map(Var::new)).unwrap();
        match s {
            SurfaceTerm::Seq(l, _) => match *l {
                SurfaceTerm::Asgn(l, _) => assert!(
                    matches!(*l, SurfaceTerm::App(ref f, _) if matches!(**f, SurfaceTerm::App(..)))
                ),
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semicolon_in_definitions_separates() {
        let t = core("nu(s: {a: Top} /\\ {b: Top}) {a = s; b = s}");
        let u = core("nu(s: {a: Top} /\\ {b: Top}) {a = s} /\\ {b = s}");
        assert_eq!(t, u);
    }

    #[test]
    fn comments_and_whitespace() {
        let t = core("// leading\nlet x = lambda(y: Top) y // trailing\n in x");
        assert!(matches!(t, Term::Let(..)));
    }

    #[test]
    fn round_trip_with_reserved_binders() {
        let t = core("let f = lambda(x: Top) x in f (f f); !(ref f Top)");
        let printed = pretty_term(&t);
        assert!(!printed.contains('%'), "{printed}");
        let back = core(&printed);
        assert!(back.alpha_eq(&t), "{printed}");
    }

    #[test]
    fn round_trip_precedence_corners() {
        for src in [
            "lambda(x: Top) (lambda(y: Top) y) x",
            "let r = ref (lambda(x: Top) x) all(z: Top) Top in (r := r); !r",
            "nu(s: {a: Top} /\\ {B: Bot..(all(z: Top) Top) /\\ Top}) {a = (let q = s in q; s)} /\\ {B = Top}",
            "lambda(x: Ref (Top /\\ Top)) ref x Top /\\ Top",
            "lambda(x: Top) x.a.b",
            "lambda(x: Top) (!x).a",
            "lambda(x: Top) !(x.a)",
        ] {
            let s = parse(src).unwrap_or_else(|e| panic!("{src}: {e}"));
            let printed = pretty_surface(&s);
            let again = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
            assert_eq!(s, again, "{src} => {printed}");
        }
    }
}
