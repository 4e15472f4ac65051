//! Source-level terms: operations may take arbitrary subterms, and `t; u`
//! sequencing is allowed. Type sugar is already expanded by the parser, so
//! types are plain [`TypeExpr`]s.

use serde::{Deserialize, Serialize};

use super::{Def, Label, Loc, Term, TypeExpr, Value, Var};

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum SurfaceTerm {
    Var(Var),
    /// Only produced when embedding runtime terms for printing.
    Loc(Loc),
    Obj(Var, TypeExpr, SurfaceDef),
    Lam(Var, TypeExpr, Box<SurfaceTerm>),
    Sel(Box<SurfaceTerm>, Label),
    App(Box<SurfaceTerm>, Box<SurfaceTerm>),
    Let(Var, Box<SurfaceTerm>, Box<SurfaceTerm>),
    Ref(Box<SurfaceTerm>, TypeExpr),
    Deref(Box<SurfaceTerm>),
    Asgn(Box<SurfaceTerm>, Box<SurfaceTerm>),
    Seq(Box<SurfaceTerm>, Box<SurfaceTerm>),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum SurfaceDef {
    Field(Label, Box<SurfaceTerm>),
    Type(Label, TypeExpr),
    And(Box<SurfaceDef>, Box<SurfaceDef>),
}

impl SurfaceTerm {
    pub fn is_sugar_free(&self) -> bool {
        let is_var = |t: &SurfaceTerm| matches!(t, SurfaceTerm::Var(_));
        match self {
            SurfaceTerm::Var(_) | SurfaceTerm::Loc(_) => true,
            SurfaceTerm::Obj(_, _, d) => d.is_sugar_free(),
            SurfaceTerm::Lam(_, _, t) => t.is_sugar_free(),
            SurfaceTerm::Sel(t, _) | SurfaceTerm::Ref(t, _) | SurfaceTerm::Deref(t) => is_var(t),
            SurfaceTerm::App(t, u) | SurfaceTerm::Asgn(t, u) => is_var(t) && is_var(u),
            SurfaceTerm::Let(_, t, u) => t.is_sugar_free() && u.is_sugar_free(),
            SurfaceTerm::Seq(..) => false,
        }
    }
}

impl SurfaceDef {
    fn is_sugar_free(&self) -> bool {
        match self {
            SurfaceDef::Field(_, t) => t.is_sugar_free(),
            SurfaceDef::Type(..) => true,
            SurfaceDef::And(l, r) => l.is_sugar_free() && r.is_sugar_free(),
        }
    }
}

impl From<&Term> for SurfaceTerm {
    fn from(t: &Term) -> SurfaceTerm {
        let var = |x: &Var| Box::new(SurfaceTerm::Var(x.clone()));
        match t {
            Term::Var(x) => SurfaceTerm::Var(x.clone()),
            Term::Val(v) => v.into(),
            Term::FieldSel(x, a) => SurfaceTerm::Sel(var(x), a.clone()),
            Term::App(x, y) => SurfaceTerm::App(var(x), var(y)),
            Term::Let(x, t, u) => {
                SurfaceTerm::Let(x.clone(), Box::new((&**t).into()), Box::new((&**u).into()))
            }
            Term::RefNew(x, ty) => SurfaceTerm::Ref(var(x), ty.clone()),
            Term::Deref(x) => SurfaceTerm::Deref(var(x)),
            Term::Asgn(x, y) => SurfaceTerm::Asgn(var(x), var(y)),
        }
    }
}

impl From<&Value> for SurfaceTerm {
    fn from(v: &Value) -> SurfaceTerm {
        match v {
            Value::Obj(x, ty, d) => SurfaceTerm::Obj(x.clone(), ty.clone(), d.into()),
            Value::Lam(x, ty, t) => {
                SurfaceTerm::Lam(x.clone(), ty.clone(), Box::new((&**t).into()))
            }
            Value::Loc(l) => SurfaceTerm::Loc(*l),
        }
    }
}

impl From<&Def> for SurfaceDef {
    fn from(d: &Def) -> SurfaceDef {
        match d {
            Def::Field(a, t) => SurfaceDef::Field(a.clone(), Box::new((&**t).into())),
            Def::Type(a, ty) => SurfaceDef::Type(a.clone(), ty.clone()),
            Def::And(l, r) => SurfaceDef::And(Box::new((&**l).into()), Box::new((&**r).into())),
        }
    }
}
