//! Printing in the concrete syntax accepted by the parser.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::syntax::surface::{SurfaceDef, SurfaceTerm};
use crate::syntax::{fresh_var, Binding, Def, Term, TypeExpr, Value, Var};

pub fn pretty_type(t: &TypeExpr) -> String {
    let mut out = String::new();
    ty(&mut out, t, 0);
    out
}

/// Prints a core term. Bound reserved names from desugaring are renamed to
/// parseable `_N` names first; free ones are printed as they are.
pub fn pretty_term(t: &Term) -> String {
    let t = printable(t);
    pretty_surface(&SurfaceTerm::from(&t))
}

pub fn pretty_value(v: &Value) -> String {
    pretty_term(&Term::Val(v.clone()))
}

pub fn pretty_defs(d: &Def) -> String {
    let mut out = String::new();
    defs(&mut out, &SurfaceDef::from(d));
    out
}

pub fn pretty_surface(t: &SurfaceTerm) -> String {
    let mut out = String::new();
    term(&mut out, t, 0);
    out
}

// Type levels: 0 = intersection, 1 = atom.
fn ty(out: &mut String, t: &TypeExpr, level: u8) {
    match t {
        TypeExpr::Top => out.push_str("Top"),
        TypeExpr::Bot => out.push_str("Bot"),
        TypeExpr::FieldDecl(a, t) => {
            let _ = write!(out, "{{{a}: ");
            ty(out, t, 0);
            out.push('}');
        }
        TypeExpr::TypeDecl(a, s, u) => {
            let _ = write!(out, "{{{a}: ");
            ty(out, s, 0);
            out.push_str("..");
            ty(out, u, 0);
            out.push('}');
        }
        TypeExpr::Sel(x, a) => {
            let _ = write!(out, "{x}.{a}");
        }
        TypeExpr::And(s, u) => parens(out, level > 0, |out| {
            // A function type on the left would swallow the rest.
            ty(out, s, u8::from(matches!(**s, TypeExpr::All(..))));
            out.push_str(" /\\ ");
            ty(out, u, 1);
        }),
        TypeExpr::Rec(x, t) => {
            let _ = write!(out, "mu({x}: ");
            ty(out, t, 0);
            out.push(')');
        }
        TypeExpr::All(x, s, t) => parens(out, level > 0, |out| {
            let _ = write!(out, "all({x}: ");
            ty(out, s, 0);
            out.push_str(") ");
            ty(out, t, 0);
        }),
        TypeExpr::RefT(t) => {
            out.push_str("Ref ");
            ty(out, t, 1);
        }
    }
}

fn parens(out: &mut String, wrap: bool, f: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    f(out);
    if wrap {
        out.push(')');
    }
}

// Term levels: 0 = sequence, 1 = assignment, 2 = application, 3 = selection,
// 4 = dereference, 5 = atom.
fn term(out: &mut String, t: &SurfaceTerm, level: u8) {
    match t {
        SurfaceTerm::Var(x) => {
            let _ = write!(out, "{x}");
        }
        SurfaceTerm::Loc(l) => {
            let _ = write!(out, "{l}");
        }
        SurfaceTerm::Obj(x, t, d) => {
            let _ = write!(out, "nu({x}: ");
            ty(out, t, 0);
            out.push_str(") ");
            defs(out, d);
        }
        SurfaceTerm::Lam(x, t, body) => parens(out, level > 0, |out| {
            let _ = write!(out, "lambda({x}: ");
            ty(out, t, 0);
            out.push_str(") ");
            term(out, body, 0);
        }),
        SurfaceTerm::Let(x, t, u) => parens(out, level > 0, |out| {
            let _ = write!(out, "let {x} = ");
            term(out, t, 0);
            out.push_str(" in ");
            term(out, u, 0);
        }),
        SurfaceTerm::Ref(t, ty_) => parens(out, level > 1, |out| {
            out.push_str("ref ");
            term(out, t, 3);
            out.push(' ');
            ty(out, ty_, 0);
        }),
        SurfaceTerm::Seq(t, u) => parens(out, level > 0, |out| {
            term(out, t, 1);
            out.push_str("; ");
            term(out, u, 0);
        }),
        SurfaceTerm::Asgn(t, u) => parens(out, level > 1, |out| {
            term(out, t, 2);
            out.push_str(" := ");
            term(out, u, 1);
        }),
        SurfaceTerm::App(t, u) => parens(out, level > 2, |out| {
            term(out, t, 2);
            out.push(' ');
            term(out, u, 3);
        }),
        SurfaceTerm::Sel(t, a) => parens(out, level > 3, |out| {
            term(out, t, 3);
            let _ = write!(out, ".{a}");
        }),
        SurfaceTerm::Deref(t) => parens(out, level > 4, |out| {
            out.push('!');
            term(out, t, 4);
        }),
    }
}

fn defs(out: &mut String, d: &SurfaceDef) {
    match d {
        SurfaceDef::Field(a, t) => {
            let _ = write!(out, "{{{a} = ");
            // `;` inside braces separates definitions.
            term(out, t, 1);
            out.push('}');
        }
        SurfaceDef::Type(a, t) => {
            let _ = write!(out, "{{{a} = ");
            ty(out, t, 0);
            out.push('}');
        }
        SurfaceDef::And(l, r) => {
            defs(out, l);
            out.push_str(" /\\ ");
            defs(out, r);
        }
    }
}

/// Renames every bound reserved binder to a fresh `_N` name.
pub(crate) fn printable(t: &Term) -> Term {
    let mut taken = t.names();
    Rename { taken: &mut taken }.term(t)
}

struct Rename<'a> {
    taken: &'a mut BTreeSet<Var>,
}

impl Rename<'_> {
    fn binder<B: Binding>(&mut self, x: &Var, body: &B) -> (Var, B) {
        match x.as_str().strip_prefix(crate::syntax::RESERVED_PREFIX) {
            Some(n) => {
                let base = Var::new(format!("_{n}"));
                let y = fresh_var(&base, |c| self.taken.contains(c));
                self.taken.insert(y.clone());
                (y.clone(), body.subst(x, &y))
            }
            None => (x.clone(), body.clone()),
        }
    }

    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::Val(v) => Term::Val(self.value(v)),
            Term::Let(x, t, u) => {
                let t = self.term(t);
                let (x, u) = self.binder(x, &**u);
                Term::let_in(x, t, self.term(&u))
            }
            _ => t.clone(),
        }
    }

    fn value(&mut self, v: &Value) -> Value {
        match v {
            Value::Obj(x, ty, d) => {
                let (x, (ty, d)) = self.binder(x, &(ty.clone(), d.clone()));
                Value::Obj(x, ty, self.def(&d))
            }
            Value::Lam(x, ty, t) => {
                let (x, t) = self.binder(x, &**t);
                Value::Lam(x, ty.clone(), Box::new(self.term(&t)))
            }
            Value::Loc(_) => v.clone(),
        }
    }

    fn def(&mut self, d: &Def) -> Def {
        match d {
            Def::Field(a, t) => Def::field(a.clone(), self.term(t)),
            Def::Type(..) => d.clone(),
            Def::And(l, r) => Def::and(self.def(l), self.def(r)),
        }
    }
}
