//! Random raw syntax, well-scoped over a small pool of names so that
//! shadowing and capture come up often.

use proptest::prelude::*;

use mdot::syntax::surface::{SurfaceDef, SurfaceTerm};
use mdot::syntax::{Def, Term, TypeExpr, Var};

pub const POOL: [&str; 4] = ["x", "y", "z", "w"];

pub fn scope() -> Vec<Var> {
    POOL.iter().map(Var::new).collect()
}

pub fn name() -> impl Strategy<Value = Var> {
    prop::sample::select(POOL.to_vec()).prop_map(Var::new)
}

fn field() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["a", "b"])
}

fn member() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["A", "B"])
}

pub fn ty() -> impl Strategy<Value = TypeExpr> {
    let leaf = prop_oneof![
        Just(TypeExpr::Top),
        Just(TypeExpr::Bot),
        (name(), member()).prop_map(|(x, a)| TypeExpr::sel(x, a)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (field(), inner.clone()).prop_map(|(a, t)| TypeExpr::field(a, t)),
            (member(), inner.clone(), inner.clone())
                .prop_map(|(a, l, u)| TypeExpr::member(a, l, u)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| TypeExpr::and(l, r)),
            (name(), inner.clone()).prop_map(|(x, t)| TypeExpr::rec(x, t)),
            (name(), inner.clone(), inner.clone()).prop_map(|(x, s, t)| TypeExpr::all(x, s, t)),
            inner.prop_map(TypeExpr::reference),
        ]
    })
}

/// Core terms, in ANF.
pub fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        name().prop_map(Term::Var),
        (name(), field()).prop_map(|(x, a)| Term::FieldSel(x, a.into())),
        (name(), name()).prop_map(|(x, y)| Term::App(x, y)),
        name().prop_map(Term::Deref),
        (name(), name()).prop_map(|(x, y)| Term::Asgn(x, y)),
        (name(), ty()).prop_map(|(x, t)| Term::RefNew(x, t)),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let defs = prop_oneof![
            (field(), inner.clone()).prop_map(|(a, t)| Def::field(a, t)),
            (member(), ty()).prop_map(|(a, t)| Def::ty(a, t)),
            (inner.clone(), ty()).prop_map(|(t, u)| Def::and(Def::field("a", t), Def::ty("A", u))),
        ];
        prop_oneof![
            (name(), inner.clone(), inner.clone()).prop_map(|(x, t, u)| Term::let_in(x, t, u)),
            (name(), ty(), inner.clone()).prop_map(|(x, s, t)| Term::lambda(x, s, t)),
            (name(), ty(), defs).prop_map(|(x, t, d)| Term::object(x, t, d)),
        ]
    })
}

/// Source terms, with compound operands and sequencing.
pub fn surface() -> impl Strategy<Value = SurfaceTerm> {
    let leaf = name().prop_map(SurfaceTerm::Var);
    leaf.prop_recursive(4, 32, 3, |inner| {
        let b = |t: SurfaceTerm| Box::new(t);
        prop_oneof![
            (inner.clone(), field()).prop_map(move |(t, a)| SurfaceTerm::Sel(b(t), a.into())),
            (inner.clone(), inner.clone()).prop_map(move |(t, u)| SurfaceTerm::App(b(t), b(u))),
            (name(), inner.clone(), inner.clone()).prop_map(move |(x, t, u)| SurfaceTerm::Let(
                x,
                b(t),
                b(u)
            )),
            (inner.clone(), ty()).prop_map(move |(t, s)| SurfaceTerm::Ref(b(t), s)),
            inner.clone().prop_map(move |t| SurfaceTerm::Deref(b(t))),
            (inner.clone(), inner.clone()).prop_map(move |(t, u)| SurfaceTerm::Asgn(b(t), b(u))),
            (inner.clone(), inner.clone()).prop_map(move |(t, u)| SurfaceTerm::Seq(b(t), b(u))),
            (name(), ty(), inner.clone()).prop_map(move |(x, s, t)| SurfaceTerm::Lam(x, s, b(t))),
            (name(), ty(), inner.clone(), ty()).prop_map(move |(x, s, t, u)| {
                let d = SurfaceDef::And(
                    Box::new(SurfaceDef::Field("a".into(), b(t))),
                    Box::new(SurfaceDef::Type("A".into(), u)),
                );
                SurfaceTerm::Obj(x, s, d)
            }),
        ]
    })
}
