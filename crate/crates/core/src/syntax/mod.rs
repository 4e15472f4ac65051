//! Abstract syntax of the calculus.
//!
//! Variables are named. Binders (`mu`, `all`, `nu`, `lambda`, `let`) keep the
//! user's names for printing; alpha-equivalence compares bound occurrences by
//! binding depth, and substitution renames binders on demand so that it never
//! captures.

mod binding;
pub mod desugar;
pub mod surface;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use binding::{fresh_var, Binding};

/// A variable name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Var {
        Var(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Names introduced by desugaring start with `%` and cannot be written in
    /// source text.
    pub fn is_reserved(&self) -> bool {
        self.0.starts_with(RESERVED_PREFIX)
    }

    pub(crate) fn primed(&self) -> Var {
        Var::new(format!("{}'", self.0))
    }
}

pub const RESERVED_PREFIX: char = '%';

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Var {
        Var::new(s)
    }
}

/// A term member (`a`, lowercase) or type member (`A`, uppercase) label.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: impl AsRef<str>) -> Label {
        Label(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Label {
        Label::new(s)
    }
}

/// A store location. Locations only arise during reduction.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Loc(pub usize);

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<loc {}>", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum TypeExpr {
    Top,
    Bot,
    /// `{a: T}`
    FieldDecl(Label, Box<TypeExpr>),
    /// `{A: S..U}`
    TypeDecl(Label, Box<TypeExpr>, Box<TypeExpr>),
    /// `x.A`
    Sel(Var, Label),
    And(Box<TypeExpr>, Box<TypeExpr>),
    /// `mu(x: T)`, binding the self variable `x` in `T`.
    Rec(Var, Box<TypeExpr>),
    /// `all(x: S) T`, binding `x` in `T` only.
    All(Var, Box<TypeExpr>, Box<TypeExpr>),
    RefT(Box<TypeExpr>),
}

impl TypeExpr {
    pub fn field(label: impl Into<Label>, ty: TypeExpr) -> TypeExpr {
        TypeExpr::FieldDecl(label.into(), Box::new(ty))
    }

    pub fn member(label: impl Into<Label>, lower: TypeExpr, upper: TypeExpr) -> TypeExpr {
        TypeExpr::TypeDecl(label.into(), Box::new(lower), Box::new(upper))
    }

    pub fn sel(var: impl Into<Var>, label: impl Into<Label>) -> TypeExpr {
        TypeExpr::Sel(var.into(), label.into())
    }

    pub fn and(left: TypeExpr, right: TypeExpr) -> TypeExpr {
        TypeExpr::And(Box::new(left), Box::new(right))
    }

    pub fn rec(binder: impl Into<Var>, body: TypeExpr) -> TypeExpr {
        TypeExpr::Rec(binder.into(), Box::new(body))
    }

    pub fn all(binder: impl Into<Var>, param: TypeExpr, result: TypeExpr) -> TypeExpr {
        TypeExpr::All(binder.into(), Box::new(param), Box::new(result))
    }

    pub fn reference(ty: TypeExpr) -> TypeExpr {
        TypeExpr::RefT(Box::new(ty))
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            TypeExpr::Top | TypeExpr::Bot | TypeExpr::Sel(..) => 1,
            TypeExpr::FieldDecl(_, t) | TypeExpr::Rec(_, t) | TypeExpr::RefT(t) => 1 + t.size(),
            TypeExpr::TypeDecl(_, s, u) | TypeExpr::And(s, u) | TypeExpr::All(_, s, u) => {
                1 + s.size() + u.size()
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Term {
    Var(Var),
    Val(Value),
    /// `x.a`
    FieldSel(Var, Label),
    /// `x y`
    App(Var, Var),
    /// `let x = t in u`
    Let(Var, Box<Term>, Box<Term>),
    /// `ref x T`
    RefNew(Var, TypeExpr),
    /// `!x`
    Deref(Var),
    /// `x := y`
    Asgn(Var, Var),
}

impl Term {
    pub fn var(name: impl Into<Var>) -> Term {
        Term::Var(name.into())
    }

    pub fn let_in(binder: impl Into<Var>, bound: Term, body: Term) -> Term {
        Term::Let(binder.into(), Box::new(bound), Box::new(body))
    }

    pub fn lambda(binder: impl Into<Var>, param: TypeExpr, body: Term) -> Term {
        Term::Val(Value::Lam(binder.into(), param, Box::new(body)))
    }

    pub fn object(self_var: impl Into<Var>, ty: TypeExpr, defs: Def) -> Term {
        Term::Val(Value::Obj(self_var.into(), ty, defs))
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Term::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn contains_location(&self) -> bool {
        match self {
            Term::Val(v) => v.contains_location(),
            Term::Let(_, t, u) => t.contains_location() || u.contains_location(),
            _ => false,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::FieldSel(..) | Term::App(..) | Term::Deref(_) | Term::Asgn(..) => {
                1
            }
            Term::Val(v) => v.size(),
            Term::Let(_, t, u) => 1 + t.size() + u.size(),
            Term::RefNew(_, ty) => 1 + ty.size(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Value {
    /// `nu(x: T) d`, binding the self variable `x` in both `T` and `d`.
    Obj(Var, TypeExpr, Def),
    /// `lambda(x: T) t`, binding `x` in `t` only.
    Lam(Var, TypeExpr, Box<Term>),
    Loc(Loc),
}

impl Value {
    pub fn contains_location(&self) -> bool {
        match self {
            Value::Loc(_) => true,
            Value::Obj(_, _, d) => d.contains_location(),
            Value::Lam(_, _, t) => t.contains_location(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Value::Obj(_, ty, d) => 1 + ty.size() + d.size(),
            Value::Lam(_, ty, t) => 1 + ty.size() + t.size(),
            Value::Loc(_) => 1,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Def {
    /// `{a = t}`
    Field(Label, Box<Term>),
    /// `{A = T}`
    Type(Label, TypeExpr),
    And(Box<Def>, Box<Def>),
}

impl Def {
    pub fn field(label: impl Into<Label>, term: Term) -> Def {
        Def::Field(label.into(), Box::new(term))
    }

    pub fn ty(label: impl Into<Label>, ty: TypeExpr) -> Def {
        Def::Type(label.into(), ty)
    }

    pub fn and(left: Def, right: Def) -> Def {
        Def::And(Box::new(left), Box::new(right))
    }

    /// Labels defined, in left-to-right order (duplicates kept).
    pub fn labels(&self) -> Vec<&Label> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a Label>) {
        match self {
            Def::Field(a, _) | Def::Type(a, _) => out.push(a),
            Def::And(l, r) => {
                l.collect_labels(out);
                r.collect_labels(out);
            }
        }
    }

    /// The field definition for `label`, if any.
    pub fn field_body(&self, label: &Label) -> Option<&Term> {
        match self {
            Def::Field(a, t) if a == label => Some(t),
            Def::Field(..) | Def::Type(..) => None,
            Def::And(l, r) => l.field_body(label).or_else(|| r.field_body(label)),
        }
    }

    pub fn contains_location(&self) -> bool {
        match self {
            Def::Field(_, t) => t.contains_location(),
            Def::Type(..) => false,
            Def::And(l, r) => l.contains_location() || r.contains_location(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Def::Field(_, t) => 1 + t.size(),
            Def::Type(_, ty) => 1 + ty.size(),
            Def::And(l, r) => 1 + l.size() + r.size(),
        }
    }
}
