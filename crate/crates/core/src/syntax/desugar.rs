//! Lowering of [`SurfaceTerm`] into core [`Term`]s.
//!
//! Non-variable operands are let-bound to reserved names `%0`, `%1`, ...
//! Operands that are already variables are used directly, so core terms come
//! out unchanged.

use super::surface::{SurfaceDef, SurfaceTerm};
use super::{Binding, Def, Term, Value, Var, RESERVED_PREFIX};

pub fn desugar(s: &SurfaceTerm) -> Term {
    let mut cx = Desugar {
        next: first_free_index(s),
    };
    cx.term(s)
}

struct Desugar {
    next: usize,
}

impl Desugar {
    fn fresh(&mut self) -> Var {
        let v = Var::new(format!("{RESERVED_PREFIX}{}", self.next));
        self.next += 1;
        v
    }

    /// Returns the variable naming `s` and, when `s` was not a variable, the
    /// binding that introduces it.
    fn operand(&mut self, s: &SurfaceTerm) -> (Var, Option<Term>) {
        match s {
            SurfaceTerm::Var(x) => (x.clone(), None),
            _ => {
                let x = self.fresh();
                (x, Some(self.term(s)))
            }
        }
    }

    fn term(&mut self, s: &SurfaceTerm) -> Term {
        match s {
            SurfaceTerm::Var(x) => Term::Var(x.clone()),
            SurfaceTerm::Loc(l) => Term::Val(Value::Loc(*l)),
            SurfaceTerm::Obj(x, ty, d) => Term::Val(Value::Obj(x.clone(), ty.clone(), self.def(d))),
            SurfaceTerm::Lam(x, ty, t) => Term::lambda(x.clone(), ty.clone(), self.term(t)),
            SurfaceTerm::Sel(t, a) => {
                let (x, b) = self.operand(t);
                wrap(x.clone(), b, Term::FieldSel(x, a.clone()))
            }
            SurfaceTerm::Ref(t, ty) => {
                let (x, b) = self.operand(t);
                wrap(x.clone(), b, Term::RefNew(x, ty.clone()))
            }
            SurfaceTerm::Deref(t) => {
                let (x, b) = self.operand(t);
                wrap(x.clone(), b, Term::Deref(x))
            }
            SurfaceTerm::App(t, u) => {
                let (x, bx) = self.operand(t);
                let (y, by) = self.operand(u);
                wrap(x.clone(), bx, wrap(y.clone(), by, Term::App(x, y)))
            }
            SurfaceTerm::Asgn(t, u) => {
                let (x, bx) = self.operand(t);
                let (y, by) = self.operand(u);
                wrap(x.clone(), bx, wrap(y.clone(), by, Term::Asgn(x, y)))
            }
            SurfaceTerm::Let(x, t, u) => Term::let_in(x.clone(), self.term(t), self.term(u)),
            SurfaceTerm::Seq(t, u) => {
                let x = self.fresh();
                Term::let_in(x, self.term(t), self.term(u))
            }
        }
    }

    fn def(&mut self, d: &SurfaceDef) -> Def {
        match d {
            SurfaceDef::Field(a, t) => Def::field(a.clone(), self.term(t)),
            SurfaceDef::Type(a, ty) => Def::ty(a.clone(), ty.clone()),
            SurfaceDef::And(l, r) => Def::and(self.def(l), self.def(r)),
        }
    }
}

fn wrap(x: Var, binding: Option<Term>, body: Term) -> Term {
    match binding {
        Some(t) => Term::let_in(x, t, body),
        None => body,
    }
}

/// Smallest index above every reserved name already present, so repeated
/// desugaring never reuses a name.
fn first_free_index(s: &SurfaceTerm) -> usize {
    let mut names = std::collections::BTreeSet::new();
    collect_names(s, &mut names);
    names
        .iter()
        .filter_map(|v| {
            v.as_str()
                .strip_prefix(RESERVED_PREFIX)?
                .parse::<usize>()
                .ok()
        })
        .map(|n| n + 1)
        .max()
        .unwrap_or(0)
}

fn collect_names(s: &SurfaceTerm, out: &mut std::collections::BTreeSet<Var>) {
    match s {
        SurfaceTerm::Var(x) => {
            out.insert(x.clone());
        }
        SurfaceTerm::Loc(_) => {}
        SurfaceTerm::Obj(x, ty, d) => {
            out.insert(x.clone());
            ty.collect_names(out);
            collect_def_names(d, out);
        }
        SurfaceTerm::Lam(x, ty, t) => {
            out.insert(x.clone());
            ty.collect_names(out);
            collect_names(t, out);
        }
        SurfaceTerm::Sel(t, _) | SurfaceTerm::Deref(t) => collect_names(t, out),
        SurfaceTerm::Ref(t, ty) => {
            collect_names(t, out);
            ty.collect_names(out);
        }
        SurfaceTerm::App(t, u) | SurfaceTerm::Asgn(t, u) | SurfaceTerm::Seq(t, u) => {
            collect_names(t, out);
            collect_names(u, out);
        }
        SurfaceTerm::Let(x, t, u) => {
            out.insert(x.clone());
            collect_names(t, out);
            collect_names(u, out);
        }
    }
}

fn collect_def_names(d: &SurfaceDef, out: &mut std::collections::BTreeSet<Var>) {
    match d {
        SurfaceDef::Field(_, t) => collect_names(t, out),
        SurfaceDef::Type(_, ty) => ty.collect_names(out),
        SurfaceDef::And(l, r) => {
            collect_def_names(l, out);
            collect_def_names(r, out);
        }
    }
}
