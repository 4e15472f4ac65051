#![allow(dead_code)]

pub mod arb;
pub mod oracle;

use mdot::parser::{parse_program, parse_type};
use mdot::syntax::{Term, TypeExpr, Var};
use mdot::typecheck::TypeEnv;

pub fn ty(src: &str, scope: &[&str]) -> TypeExpr {
    let scope: Vec<Var> = scope.iter().map(Var::new).collect();
    parse_type(src, &scope).unwrap_or_else(|e| panic!("{src}: {e}"))
}

/// Context from `(name, type)` pairs; each type may mention earlier names.
pub fn env(items: &[(&str, &str)]) -> TypeEnv {
    let mut scope = Vec::new();
    let mut out = TypeEnv::new();
    for (x, t) in items {
        out = out.extend(Var::new(x), ty(t, &scope));
        scope.push(*x);
    }
    out
}

pub fn program(src: &str) -> Term {
    parse_program(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn var(x: &str) -> Var {
    Var::new(x)
}

pub fn corpus(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/");
    std::fs::read_to_string(format!("{path}{name}")).unwrap_or_else(|e| panic!("{name}: {e}"))
}
