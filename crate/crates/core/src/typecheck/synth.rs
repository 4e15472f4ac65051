//! Syntax-directed typing of terms and definitions.

use std::collections::{BTreeSet, HashSet};
use std::rc::Rc;

use super::derivation::{Derivation, Judgment, Rule};
use super::env::{StoreTyping, TypeEnv};
use super::search::{Exposure, Search};
use super::{Decision, Fuel, TypeError, Typed};
use crate::parser::{pretty_defs, pretty_term, pretty_type};
use crate::syntax::{fresh_var, Binding, Def, Label, Term, TypeExpr, Value, Var};

pub(crate) struct Synth<'s> {
    search: Search<'s>,
}

fn typed(ty: TypeExpr, derivation: Derivation) -> Typed {
    Typed { ty, derivation }
}

impl<'s> Synth<'s> {
    pub fn new(sigma: &'s StoreTyping, fuel: Fuel) -> Synth<'s> {
        Synth {
            search: Search::new(sigma, fuel),
        }
    }

    fn sigma(&self) -> &'s StoreTyping {
        self.search.sigma()
    }

    fn judgment(&self, env: &TypeEnv, term: Term, ty: TypeExpr) -> Judgment {
        self.search.typed(env, term, ty)
    }

    fn node(
        &self,
        rule: Rule,
        env: &TypeEnv,
        term: Term,
        ty: TypeExpr,
        premises: Vec<Derivation>,
    ) -> Derivation {
        Derivation::new(rule, self.judgment(env, term, ty), premises)
    }

    fn defs_node(
        &self,
        rule: Rule,
        env: &TypeEnv,
        defs: Def,
        ty: TypeExpr,
        premises: Vec<Derivation>,
    ) -> Derivation {
        let j = Judgment::Defs {
            env: env.clone(),
            sigma: self.sigma().clone(),
            defs,
            ty,
        };
        Derivation::new(rule, j, premises)
    }

    // ---- fuel-bounded queries ----

    fn decided<T>(d: Decision<T>) -> Result<Option<T>, TypeError> {
        match d {
            Decision::Yes(t) => Ok(Some(t)),
            Decision::No => Ok(None),
            Decision::Unknown => Err(TypeError::OutOfFuel),
        }
    }

    fn subtype(
        &mut self,
        env: &TypeEnv,
        s: &TypeExpr,
        u: &TypeExpr,
    ) -> Result<Option<Derivation>, TypeError> {
        self.search.refuel();
        Self::decided(self.search.subtype_query(env, s, u))
    }

    fn check_var(
        &mut self,
        env: &TypeEnv,
        x: &Var,
        t: &TypeExpr,
    ) -> Result<Option<Derivation>, TypeError> {
        if !env.contains(x) {
            return Err(TypeError::UnboundVariable(x.clone()));
        }
        self.search.refuel();
        Self::decided(self.search.check_var_query(env, x, t))
    }

    fn expose(&mut self, env: &TypeEnv, x: &Var) -> Result<Rc<Exposure>, TypeError> {
        if !env.contains(x) {
            return Err(TypeError::UnboundVariable(x.clone()));
        }
        self.search.refuel();
        match self.search.expose(env, x) {
            Decision::Yes(e) => Ok(e),
            Decision::No => Err(TypeError::UnboundVariable(x.clone())),
            Decision::Unknown => Err(TypeError::OutOfFuel),
        }
    }

    fn scoped(env: &TypeEnv, ty: &TypeExpr) -> Result<(), TypeError> {
        match ty.free_vars().into_iter().find(|x| !env.contains(x)) {
            Some(x) => Err(TypeError::UnboundVariable(x)),
            None => Ok(()),
        }
    }

    /// A binder name that is not bound in `env`, renaming `x` if needed.
    fn binder(env: &TypeEnv, x: &Var, mentioned: impl Fn() -> BTreeSet<Var>) -> Var {
        if !env.contains(x) {
            return x.clone();
        }
        let taken: HashSet<Var> = env.all_names().into_iter().chain(mentioned()).collect();
        fresh_var(x, |v| taken.contains(v))
    }

    // ---- synthesis ----

    pub fn synth(&mut self, env: &TypeEnv, t: &Term) -> Result<Typed, TypeError> {
        match t {
            Term::Var(x) => {
                let ty = env
                    .lookup(x)
                    .ok_or_else(|| TypeError::UnboundVariable(x.clone()))?
                    .clone();
                Ok(typed(
                    ty.clone(),
                    self.node(Rule::Var, env, t.clone(), ty, vec![]),
                ))
            }
            Term::Val(Value::Loc(l)) => {
                let s = self
                    .sigma()
                    .get(*l)
                    .ok_or(TypeError::UnknownLocation(*l))?
                    .clone();
                let ty = TypeExpr::reference(s);
                Ok(typed(
                    ty.clone(),
                    self.node(Rule::Loc, env, t.clone(), ty, vec![]),
                ))
            }
            Term::Val(Value::Lam(x, s, body)) => {
                Self::scoped(env, s)?;
                let y = Self::binder(env, x, || t.names());
                let body = (**body).subst(x, &y);
                let inner = env.extend(y.clone(), s.clone());
                let r = self.synth(&inner, &body)?;
                let ty = TypeExpr::all(y.clone(), s.clone(), r.ty);
                let term = Term::lambda(y, s.clone(), body);
                Ok(typed(
                    ty.clone(),
                    self.node(Rule::AllI, env, term, ty, vec![r.derivation]),
                ))
            }
            Term::Val(Value::Obj(x, s, ds)) => {
                let y = Self::binder(env, x, || t.names());
                let (s, ds) = (s.subst(x, &y), ds.subst(x, &y));
                let inner = env.extend(y.clone(), s.clone());
                Self::scoped(&inner, &s)?;
                let dd = self.check_defs(&inner, &ds, &s)?;
                let ty = TypeExpr::rec(y.clone(), s.clone());
                let term = Term::object(y, s, ds);
                Ok(typed(
                    ty.clone(),
                    self.node(Rule::ObjI, env, term, ty, vec![dd]),
                ))
            }
            Term::FieldSel(x, a) => self.synth_select(env, t, x, a),
            Term::App(x, y) => self.synth_apply(env, t, x, y),
            Term::Let(x, bound, body) => {
                let b = self.synth(env, bound)?;
                let y = Self::binder(env, x, || t.names());
                let body = (**body).subst(x, &y);
                let inner = env.extend(y.clone(), b.ty.clone());
                let r = self.synth(&inner, &body)?;
                if r.ty.occurs_free(&y) {
                    return Err(TypeError::Escape {
                        term: pretty_term(t),
                        var: y,
                        ty: pretty_type(&r.ty),
                    });
                }
                let term = Term::let_in(y, (**bound).clone(), body);
                let d = self.node(
                    Rule::Let,
                    env,
                    term,
                    r.ty.clone(),
                    vec![b.derivation, r.derivation],
                );
                Ok(typed(r.ty, d))
            }
            Term::RefNew(x, s) => {
                Self::scoped(env, s)?;
                let dx = self
                    .check_var(env, x, s)?
                    .ok_or_else(|| TypeError::Mismatch {
                        term: x.to_string(),
                        expected: pretty_type(s),
                    })?;
                let ty = TypeExpr::reference(s.clone());
                Ok(typed(
                    ty.clone(),
                    self.node(Rule::RefI, env, t.clone(), ty, vec![dx]),
                ))
            }
            Term::Deref(x) => {
                let ex = self.expose(env, x)?;
                if let Some(bot) = &ex.bottom {
                    let dx = self.from_bottom(env, bot, &TypeExpr::reference(TypeExpr::Bot));
                    let d = self.node(Rule::RefE, env, t.clone(), TypeExpr::Bot, vec![dx]);
                    return Ok(typed(TypeExpr::Bot, d));
                }
                for e in &ex.items {
                    if let TypeExpr::RefT(u) = &e.ty {
                        let d = self.node(
                            Rule::RefE,
                            env,
                            t.clone(),
                            (**u).clone(),
                            vec![e.deriv.clone()],
                        );
                        return Ok(typed((**u).clone(), d));
                    }
                }
                Err(TypeError::NotARef {
                    var: x.clone(),
                    ty: pretty_type(&ex.items[0].ty),
                })
            }
            Term::Asgn(x, y) => self.synth_assign(env, t, x, y),
        }
    }

    fn from_bottom(&self, env: &TypeEnv, bot: &Derivation, target: &TypeExpr) -> Derivation {
        let j = Judgment::Sub {
            env: env.clone(),
            sigma: self.sigma().clone(),
            lower: TypeExpr::Bot,
            upper: target.clone(),
        };
        self.search
            .subsume(bot.clone(), Derivation::new(Rule::Bot, j, vec![]))
    }

    fn synth_select(
        &mut self,
        env: &TypeEnv,
        t: &Term,
        x: &Var,
        a: &Label,
    ) -> Result<Typed, TypeError> {
        let ex = self.expose(env, x)?;
        if let Some(bot) = &ex.bottom {
            let dx = self.from_bottom(env, bot, &TypeExpr::field(a.clone(), TypeExpr::Bot));
            let d = self.node(Rule::ObjE, env, t.clone(), TypeExpr::Bot, vec![dx]);
            return Ok(typed(TypeExpr::Bot, d));
        }
        for e in &ex.items {
            if let TypeExpr::FieldDecl(b, u) = &e.ty {
                if b == a {
                    let d = self.node(
                        Rule::ObjE,
                        env,
                        t.clone(),
                        (**u).clone(),
                        vec![e.deriv.clone()],
                    );
                    return Ok(typed((**u).clone(), d));
                }
            }
        }
        Err(TypeError::NoField {
            var: x.clone(),
            label: a.clone(),
        })
    }

    fn synth_apply(
        &mut self,
        env: &TypeEnv,
        t: &Term,
        x: &Var,
        y: &Var,
    ) -> Result<Typed, TypeError> {
        let ex = self.expose(env, x)?;
        if let Some(bot) = &ex.bottom {
            let z = Var::new("z");
            let fty = TypeExpr::all(z, TypeExpr::Top, TypeExpr::Bot);
            let dx = self.from_bottom(env, bot, &fty);
            let dy = self
                .check_var(env, y, &TypeExpr::Top)?
                .ok_or_else(|| TypeError::UnboundVariable(y.clone()))?;
            let d = self.node(Rule::AllE, env, t.clone(), TypeExpr::Bot, vec![dx, dy]);
            return Ok(typed(TypeExpr::Bot, d));
        }
        let mut expected = None;
        for e in &ex.items {
            if let TypeExpr::All(z, s, r) = &e.ty {
                if let Some(dy) = self.check_var(env, y, s)? {
                    let ty = (**r).subst(z, y);
                    let d = self.node(
                        Rule::AllE,
                        env,
                        t.clone(),
                        ty.clone(),
                        vec![e.deriv.clone(), dy],
                    );
                    return Ok(typed(ty, d));
                }
                expected.get_or_insert_with(|| pretty_type(s));
            }
        }
        match expected {
            Some(expected) => Err(TypeError::Mismatch {
                term: y.to_string(),
                expected,
            }),
            None => Err(TypeError::NotAFunction {
                var: x.clone(),
                ty: pretty_type(&ex.items[0].ty),
            }),
        }
    }

    fn synth_assign(
        &mut self,
        env: &TypeEnv,
        t: &Term,
        x: &Var,
        y: &Var,
    ) -> Result<Typed, TypeError> {
        let ex = self.expose(env, x)?;
        if let Some(bot) = &ex.bottom {
            let u = env
                .lookup(y)
                .ok_or_else(|| TypeError::UnboundVariable(y.clone()))?
                .clone();
            let dx = self.from_bottom(env, bot, &TypeExpr::reference(u.clone()));
            let dy = self.node(Rule::Var, env, Term::Var(y.clone()), u.clone(), vec![]);
            let d = self.node(Rule::Asgn, env, t.clone(), u.clone(), vec![dx, dy]);
            return Ok(typed(u, d));
        }
        let mut expected = None;
        for e in &ex.items {
            if let TypeExpr::RefT(u) = &e.ty {
                if let Some(dy) = self.check_var(env, y, u)? {
                    let d = self.node(
                        Rule::Asgn,
                        env,
                        t.clone(),
                        (**u).clone(),
                        vec![e.deriv.clone(), dy],
                    );
                    return Ok(typed((**u).clone(), d));
                }
                expected.get_or_insert_with(|| pretty_type(u));
            }
        }
        match expected {
            Some(expected) => Err(TypeError::Mismatch {
                term: y.to_string(),
                expected,
            }),
            None => Err(TypeError::NotARef {
                var: x.clone(),
                ty: pretty_type(&ex.items[0].ty),
            }),
        }
    }

    // ---- checking ----

    pub fn check(
        &mut self,
        env: &TypeEnv,
        t: &Term,
        ty: &TypeExpr,
    ) -> Result<Derivation, TypeError> {
        Self::scoped(env, ty)?;
        match t {
            Term::Var(x) => {
                return self
                    .check_var(env, x, ty)?
                    .ok_or_else(|| TypeError::Mismatch {
                        term: pretty_term(t),
                        expected: pretty_type(ty),
                    })
            }
            Term::Let(x, bound, body) => {
                let b = self.synth(env, bound)?;
                let y = if env.contains(x) || ty.occurs_free(x) {
                    let taken: HashSet<Var> = env
                        .all_names()
                        .into_iter()
                        .chain(t.names())
                        .chain(ty.names())
                        .collect();
                    fresh_var(x, |v| taken.contains(v))
                } else {
                    x.clone()
                };
                let body = (**body).subst(x, &y);
                let inner = env.extend(y.clone(), b.ty.clone());
                let r = self.check(&inner, &body, ty)?;
                let term = Term::let_in(y, (**bound).clone(), body);
                return Ok(self.node(Rule::Let, env, term, ty.clone(), vec![b.derivation, r]));
            }
            Term::Val(Value::Lam(x, s, body)) => {
                if let TypeExpr::All(z, s2, u) = ty {
                    if s.alpha_eq(s2) {
                        Self::scoped(env, s)?;
                        let y = Self::binder(env, x, || t.names());
                        let body = (**body).subst(x, &y);
                        let inner = env.extend(y.clone(), s.clone());
                        let r = self.check(&inner, &body, &u.subst(z, &y))?;
                        let term = Term::lambda(y, s.clone(), body);
                        return Ok(self.node(Rule::AllI, env, term, ty.clone(), vec![r]));
                    }
                }
            }
            _ => {}
        }
        let r = self.synth(env, t)?;
        match self.subtype(env, &r.ty, ty)? {
            Some(s) => Ok(self.search.subsume(r.derivation, s)),
            None => Err(TypeError::Mismatch {
                term: pretty_term(t),
                expected: pretty_type(ty),
            }),
        }
    }

    fn distinct_labels(ds: &Def) -> Result<(), TypeError> {
        let mut seen = BTreeSet::new();
        for l in ds.labels() {
            if !seen.insert(l) {
                return Err(TypeError::DuplicateLabel(l.clone()));
            }
        }
        Ok(())
    }

    /// Definitions against the exact type an object declares for them.
    pub fn check_defs(
        &mut self,
        env: &TypeEnv,
        ds: &Def,
        ty: &TypeExpr,
    ) -> Result<Derivation, TypeError> {
        Self::distinct_labels(ds)?;
        self.check_defs_shape(env, ds, ty)
    }

    fn check_defs_shape(
        &mut self,
        env: &TypeEnv,
        ds: &Def,
        ty: &TypeExpr,
    ) -> Result<Derivation, TypeError> {
        let shape = || TypeError::DefShape {
            defs: pretty_defs(ds),
            expected: pretty_type(ty),
        };
        match (ds, ty) {
            (Def::And(d1, d2), TypeExpr::And(t1, t2)) => {
                let p1 = self.check_defs_shape(env, d1, t1)?;
                let p2 = self.check_defs_shape(env, d2, t2)?;
                Ok(self.defs_node(Rule::AndDefI, env, ds.clone(), ty.clone(), vec![p1, p2]))
            }
            (Def::Type(a, s), TypeExpr::TypeDecl(b, lo, hi))
                if a == b && (**lo).alpha_eq(s) && (**hi).alpha_eq(s) =>
            {
                Self::scoped(env, s)?;
                Ok(self.defs_node(Rule::TypI, env, ds.clone(), ty.clone(), vec![]))
            }
            (Def::Field(a, t), TypeExpr::FieldDecl(b, u)) if a == b => {
                let p = self.check(env, t, u)?;
                Ok(self.defs_node(Rule::FldI, env, ds.clone(), ty.clone(), vec![p]))
            }
            _ => Err(shape()),
        }
    }

    pub fn synth_defs(&mut self, env: &TypeEnv, ds: &Def) -> Result<Typed, TypeError> {
        Self::distinct_labels(ds)?;
        self.synth_defs_inner(env, ds)
    }

    fn synth_defs_inner(&mut self, env: &TypeEnv, ds: &Def) -> Result<Typed, TypeError> {
        match ds {
            Def::And(d1, d2) => {
                let a = self.synth_defs_inner(env, d1)?;
                let b = self.synth_defs_inner(env, d2)?;
                let ty = TypeExpr::and(a.ty, b.ty);
                let d = self.defs_node(
                    Rule::AndDefI,
                    env,
                    ds.clone(),
                    ty.clone(),
                    vec![a.derivation, b.derivation],
                );
                Ok(typed(ty, d))
            }
            Def::Type(a, s) => {
                Self::scoped(env, s)?;
                let ty = TypeExpr::member(a.clone(), s.clone(), s.clone());
                Ok(typed(
                    ty.clone(),
                    self.defs_node(Rule::TypI, env, ds.clone(), ty, vec![]),
                ))
            }
            Def::Field(a, t) => {
                let r = self.synth(env, t)?;
                let ty = TypeExpr::field(a.clone(), r.ty);
                Ok(typed(
                    ty.clone(),
                    self.defs_node(Rule::FldI, env, ds.clone(), ty, vec![r.derivation]),
                ))
            }
        }
    }
}
