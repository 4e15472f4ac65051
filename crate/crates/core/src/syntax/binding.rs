use std::collections::BTreeSet;

use super::{Def, Term, TypeExpr, Value, Var};

/// Operations every syntactic category supports with respect to variable
/// binding.
pub trait Binding: Sized + Clone {
    /// Adds free variables not in `bound` to `out`.
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>);

    /// Adds every variable name occurring anywhere, bound or free.
    fn collect_names(&self, out: &mut BTreeSet<Var>);

    /// Capture-avoiding replacement of free `from` by `to`.
    fn subst(&self, from: &Var, to: &Var) -> Self;

    #[doc(hidden)]
    fn alpha_eq_in(&self, other: &Self, scope: &mut AlphaScope) -> bool;

    fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn names(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn occurs_free(&self, x: &Var) -> bool {
        self.free_vars().contains(x)
    }

    /// Equality up to consistent renaming of bound variables.
    fn alpha_eq(&self, other: &Self) -> bool {
        self.alpha_eq_in(other, &mut AlphaScope::default())
    }
}

/// Paired binder stacks for alpha-equivalence. A bound variable is identified
/// by its distance from the innermost binder, so names never matter.
#[derive(Default)]
pub struct AlphaScope {
    left: Vec<Var>,
    right: Vec<Var>,
}

impl AlphaScope {
    fn vars_match(&self, x: &Var, y: &Var) -> bool {
        let lx = self.left.iter().rev().position(|v| v == x);
        let ry = self.right.iter().rev().position(|v| v == y);
        match (lx, ry) {
            (None, None) => x == y,
            (Some(i), Some(j)) => i == j,
            _ => false,
        }
    }

    fn under<R>(&mut self, x: &Var, y: &Var, f: impl FnOnce(&mut Self) -> R) -> R {
        self.left.push(x.clone());
        self.right.push(y.clone());
        let r = f(self);
        self.left.pop();
        self.right.pop();
        r
    }
}

/// `base`, or `base` with primes appended, whichever first satisfies `avoid`
/// returning false.
pub fn fresh_var(base: &Var, mut avoid: impl FnMut(&Var) -> bool) -> Var {
    let mut candidate = base.clone();
    while avoid(&candidate) {
        candidate = candidate.primed();
    }
    candidate
}

/// Substitutes under a binder. Returns the (possibly renamed) binder and body.
fn subst_under<B: Binding>(binder: &Var, body: &B, from: &Var, to: &Var) -> (Var, B) {
    if binder == from {
        return (binder.clone(), body.clone());
    }
    if binder == to {
        let free = body.free_vars();
        if !free.contains(from) {
            return (binder.clone(), body.clone());
        }
        let renamed = fresh_var(binder, |v| free.contains(v) || v == from || v == to);
        let body = body.subst(binder, &renamed).subst(from, to);
        return (renamed, body);
    }
    (binder.clone(), body.subst(from, to))
}

fn subst_var(x: &Var, from: &Var, to: &Var) -> Var {
    if x == from {
        to.clone()
    } else {
        x.clone()
    }
}

fn free_var(x: &Var, bound: &[Var], out: &mut BTreeSet<Var>) {
    if !bound.contains(x) {
        out.insert(x.clone());
    }
}

impl<A: Binding, B: Binding> Binding for (A, B) {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        self.0.collect_free(bound, out);
        self.1.collect_free(bound, out);
    }

    fn collect_names(&self, out: &mut BTreeSet<Var>) {
        self.0.collect_names(out);
        self.1.collect_names(out);
    }

    fn subst(&self, from: &Var, to: &Var) -> Self {
        (self.0.subst(from, to), self.1.subst(from, to))
    }

    fn alpha_eq_in(&self, other: &Self, scope: &mut AlphaScope) -> bool {
        self.0.alpha_eq_in(&other.0, scope) && self.1.alpha_eq_in(&other.1, scope)
    }
}

impl<A: Binding> Binding for Box<A> {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        (**self).collect_free(bound, out)
    }

    fn collect_names(&self, out: &mut BTreeSet<Var>) {
        (**self).collect_names(out)
    }

    fn subst(&self, from: &Var, to: &Var) -> Self {
        Box::new((**self).subst(from, to))
    }

    fn alpha_eq_in(&self, other: &Self, scope: &mut AlphaScope) -> bool {
        (**self).alpha_eq_in(other, scope)
    }
}

fn with_bound<R>(bound: &mut Vec<Var>, x: &Var, f: impl FnOnce(&mut Vec<Var>) -> R) -> R {
    bound.push(x.clone());
    let r = f(bound);
    bound.pop();
    r
}

impl Binding for TypeExpr {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            TypeExpr::Top | TypeExpr::Bot => {}
            TypeExpr::FieldDecl(_, t) | TypeExpr::RefT(t) => t.collect_free(bound, out),
            TypeExpr::TypeDecl(_, s, u) | TypeExpr::And(s, u) => {
                s.collect_free(bound, out);
                u.collect_free(bound, out);
            }
            TypeExpr::Sel(x, _) => free_var(x, bound, out),
            TypeExpr::Rec(x, t) => with_bound(bound, x, |b| t.collect_free(b, out)),
            TypeExpr::All(x, s, t) => {
                s.collect_free(bound, out);
                with_bound(bound, x, |b| t.collect_free(b, out));
            }
        }
    }

    fn collect_names(&self, out: &mut BTreeSet<Var>) {
        match self {
            TypeExpr::Top | TypeExpr::Bot => {}
            TypeExpr::FieldDecl(_, t) | TypeExpr::RefT(t) => t.collect_names(out),
            TypeExpr::TypeDecl(_, s, u) | TypeExpr::And(s, u) => {
                s.collect_names(out);
                u.collect_names(out);
            }
            TypeExpr::Sel(x, _) => {
                out.insert(x.clone());
            }
            TypeExpr::Rec(x, t) => {
                out.insert(x.clone());
                t.collect_names(out);
            }
            TypeExpr::All(x, s, t) => {
                out.insert(x.clone());
                s.collect_names(out);
                t.collect_names(out);
            }
        }
    }

    fn subst(&self, from: &Var, to: &Var) -> Self {
        match self {
            TypeExpr::Top | TypeExpr::Bot => self.clone(),
            TypeExpr::FieldDecl(a, t) => TypeExpr::FieldDecl(a.clone(), t.subst(from, to)),
            TypeExpr::TypeDecl(a, s, u) => {
                TypeExpr::TypeDecl(a.clone(), s.subst(from, to), u.subst(from, to))
            }
            TypeExpr::Sel(x, a) => TypeExpr::Sel(subst_var(x, from, to), a.clone()),
            TypeExpr::And(s, u) => TypeExpr::And(s.subst(from, to), u.subst(from, to)),
            TypeExpr::Rec(x, t) => {
                let (x, t) = subst_under(x, t, from, to);
                TypeExpr::Rec(x, t)
            }
            TypeExpr::All(x, s, t) => {
                let s = s.subst(from, to);
                let (x, t) = subst_under(x, t, from, to);
                TypeExpr::All(x, s, t)
            }
            TypeExpr::RefT(t) => TypeExpr::RefT(t.subst(from, to)),
        }
    }

    fn alpha_eq_in(&self, other: &Self, scope: &mut AlphaScope) -> bool {
        use TypeExpr::*;
        match (self, other) {
            (Top, Top) | (Bot, Bot) => true,
            (FieldDecl(a, t), FieldDecl(b, u)) => a == b && t.alpha_eq_in(u, scope),
            (TypeDecl(a, s1, u1), TypeDecl(b, s2, u2)) => {
                a == b && s1.alpha_eq_in(s2, scope) && u1.alpha_eq_in(u2, scope)
            }
            (Sel(x, a), Sel(y, b)) => a == b && scope.vars_match(x, y),
            (And(s1, u1), And(s2, u2)) => s1.alpha_eq_in(s2, scope) && u1.alpha_eq_in(u2, scope),
            (Rec(x, t), Rec(y, u)) => scope.under(x, y, |sc| t.alpha_eq_in(u, sc)),
            (All(x, s1, t1), All(y, s2, t2)) => {
                s1.alpha_eq_in(s2, scope) && scope.under(x, y, |sc| t1.alpha_eq_in(t2, sc))
            }
            (RefT(t), RefT(u)) => t.alpha_eq_in(u, scope),
            _ => false,
        }
    }
}

impl Binding for Term {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(x) | Term::FieldSel(x, _) | Term::Deref(x) => free_var(x, bound, out),
            Term::App(x, y) | Term::Asgn(x, y) => {
                free_var(x, bound, out);
                free_var(y, bound, out);
            }
            Term::Val(v) => v.collect_free(bound, out),
            Term::Let(x, t, u) => {
                t.collect_free(bound, out);
                with_bound(bound, x, |b| u.collect_free(b, out));
            }
            Term::RefNew(x, ty) => {
                free_var(x, bound, out);
                ty.collect_free(bound, out);
            }
        }
    }

    fn collect_names(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(x) | Term::FieldSel(x, _) | Term::Deref(x) => {
                out.insert(x.clone());
            }
            Term::App(x, y) | Term::Asgn(x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            Term::Val(v) => v.collect_names(out),
            Term::Let(x, t, u) => {
                out.insert(x.clone());
                t.collect_names(out);
                u.collect_names(out);
            }
            Term::RefNew(x, ty) => {
                out.insert(x.clone());
                ty.collect_names(out);
            }
        }
    }

    fn subst(&self, from: &Var, to: &Var) -> Self {
        match self {
            Term::Var(x) => Term::Var(subst_var(x, from, to)),
            Term::Val(v) => Term::Val(v.subst(from, to)),
            Term::FieldSel(x, a) => Term::FieldSel(subst_var(x, from, to), a.clone()),
            Term::App(x, y) => Term::App(subst_var(x, from, to), subst_var(y, from, to)),
            Term::Let(x, t, u) => {
                let t = t.subst(from, to);
                let (x, u) = subst_under(x, u, from, to);
                Term::Let(x, t, u)
            }
            Term::RefNew(x, ty) => Term::RefNew(subst_var(x, from, to), ty.subst(from, to)),
            Term::Deref(x) => Term::Deref(subst_var(x, from, to)),
            Term::Asgn(x, y) => Term::Asgn(subst_var(x, from, to), subst_var(y, from, to)),
        }
    }

    fn alpha_eq_in(&self, other: &Self, scope: &mut AlphaScope) -> bool {
        match (self, other) {
            (Term::Var(x), Term::Var(y)) | (Term::Deref(x), Term::Deref(y)) => {
                scope.vars_match(x, y)
            }
            (Term::Val(v), Term::Val(w)) => v.alpha_eq_in(w, scope),
            (Term::FieldSel(x, a), Term::FieldSel(y, b)) => a == b && scope.vars_match(x, y),
            (Term::App(x1, y1), Term::App(x2, y2)) | (Term::Asgn(x1, y1), Term::Asgn(x2, y2)) => {
                scope.vars_match(x1, x2) && scope.vars_match(y1, y2)
            }
            (Term::Let(x, t1, u1), Term::Let(y, t2, u2)) => {
                t1.alpha_eq_in(t2, scope) && scope.under(x, y, |sc| u1.alpha_eq_in(u2, sc))
            }
            (Term::RefNew(x, t), Term::RefNew(y, u)) => {
                scope.vars_match(x, y) && t.alpha_eq_in(u, scope)
            }
            _ => false,
        }
    }
}

impl Binding for Value {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Value::Obj(x, ty, d) => with_bound(bound, x, |b| {
                ty.collect_free(b, out);
                d.collect_free(b, out);
            }),
            Value::Lam(x, ty, t) => {
                ty.collect_free(bound, out);
                with_bound(bound, x, |b| t.collect_free(b, out));
            }
            Value::Loc(_) => {}
        }
    }

    fn collect_names(&self, out: &mut BTreeSet<Var>) {
        match self {
            Value::Obj(x, ty, d) => {
                out.insert(x.clone());
                ty.collect_names(out);
                d.collect_names(out);
            }
            Value::Lam(x, ty, t) => {
                out.insert(x.clone());
                ty.collect_names(out);
                t.collect_names(out);
            }
            Value::Loc(_) => {}
        }
    }

    fn subst(&self, from: &Var, to: &Var) -> Self {
        match self {
            Value::Obj(x, ty, d) => {
                let (x, (ty, d)) = subst_under(x, &(ty.clone(), d.clone()), from, to);
                Value::Obj(x, ty, d)
            }
            Value::Lam(x, ty, t) => {
                let ty = ty.subst(from, to);
                let (x, t) = subst_under(x, t, from, to);
                Value::Lam(x, ty, t)
            }
            Value::Loc(l) => Value::Loc(*l),
        }
    }

    fn alpha_eq_in(&self, other: &Self, scope: &mut AlphaScope) -> bool {
        match (self, other) {
            (Value::Obj(x, t1, d1), Value::Obj(y, t2, d2)) => {
                scope.under(x, y, |sc| t1.alpha_eq_in(t2, sc) && d1.alpha_eq_in(d2, sc))
            }
            (Value::Lam(x, s1, t1), Value::Lam(y, s2, t2)) => {
                s1.alpha_eq_in(s2, scope) && scope.under(x, y, |sc| t1.alpha_eq_in(t2, sc))
            }
            (Value::Loc(l), Value::Loc(m)) => l == m,
            _ => false,
        }
    }
}

impl Binding for Def {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Def::Field(_, t) => t.collect_free(bound, out),
            Def::Type(_, ty) => ty.collect_free(bound, out),
            Def::And(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
        }
    }

    fn collect_names(&self, out: &mut BTreeSet<Var>) {
        match self {
            Def::Field(_, t) => t.collect_names(out),
            Def::Type(_, ty) => ty.collect_names(out),
            Def::And(l, r) => {
                l.collect_names(out);
                r.collect_names(out);
            }
        }
    }

    fn subst(&self, from: &Var, to: &Var) -> Self {
        match self {
            Def::Field(a, t) => Def::Field(a.clone(), t.subst(from, to)),
            Def::Type(a, ty) => Def::Type(a.clone(), ty.subst(from, to)),
            Def::And(l, r) => Def::And(l.subst(from, to), r.subst(from, to)),
        }
    }

    fn alpha_eq_in(&self, other: &Self, scope: &mut AlphaScope) -> bool {
        match (self, other) {
            (Def::Field(a, t), Def::Field(b, u)) => a == b && t.alpha_eq_in(u, scope),
            (Def::Type(a, t), Def::Type(b, u)) => a == b && t.alpha_eq_in(u, scope),
            (Def::And(l1, r1), Def::And(l2, r2)) => {
                l1.alpha_eq_in(l2, scope) && r1.alpha_eq_in(r2, scope)
            }
            _ => false,
        }
    }
}
