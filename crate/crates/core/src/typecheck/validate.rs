//! Independent checker for derivation trees.
//!
//! Each node is checked against the schema of its rule alone: conclusion and
//! premises must instantiate the rule exactly, up to alpha-equivalence of
//! terms and types, and side conditions are recomputed here. Nothing from the search
//! is trusted.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::derivation::{Derivation, Judgment, Rule};
use super::env::{StoreTyping, TypeEnv};
use crate::syntax::{Binding, Def, Term, TypeExpr, Value, Var};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Problem {
    /// Child indices from the root to the offending node.
    pub path: Vec<usize>,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(
            f,
            "at /{} [{}]: {}",
            path.join("/"),
            self.rule,
            self.message
        )
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Validation {
    pub problems: Vec<Problem>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.problems.is_empty()
    }
}

pub fn validate_derivation(d: &Derivation) -> Validation {
    let mut v = Validation::default();
    let env = d.conclusion.env();
    let vars = env.vars();
    let distinct: BTreeSet<&Var> = vars.iter().copied().collect();
    if distinct.len() != vars.len() {
        v.problems.push(Problem {
            path: vec![],
            rule: d.rule,
            message: "context binds a variable twice".into(),
        });
    }
    for (i, (x, t)) in env.bindings().iter().enumerate() {
        let earlier: BTreeSet<&Var> = vars[..i].iter().copied().collect();
        if let Some(y) = t
            .free_vars()
            .iter()
            .find(|y| !earlier.contains(y) && *y != *x)
        {
            v.problems.push(Problem {
                path: vec![],
                rule: d.rule,
                message: format!("context entry {x} mentions {y}, which is not bound before it"),
            });
        }
    }
    walk(d, &mut Vec::new(), &mut v);
    v
}

fn walk(d: &Derivation, path: &mut Vec<usize>, v: &mut Validation) {
    if let Err(message) = check_node(d) {
        v.problems.push(Problem {
            path: path.clone(),
            rule: d.rule,
            message,
        });
    }
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        walk(p, path, v);
        path.pop();
    }
}

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn same_type(a: &TypeExpr, b: &TypeExpr, what: &str) -> Check {
    ensure(a.alpha_eq(b), || {
        format!(
            "{what}: `{}` is not `{}`",
            crate::parser::pretty_type(a),
            crate::parser::pretty_type(b)
        )
    })
}

fn arity(d: &Derivation, n: usize) -> Check {
    ensure(d.premises.len() == n, || {
        format!("expected {n} premises, found {}", d.premises.len())
    })
}

fn same_contexts(d: &Derivation, premise: &Derivation) -> Check {
    ensure(premise.conclusion.env() == d.conclusion.env(), || {
        "premise context differs from conclusion context".into()
    })?;
    ensure(premise.conclusion.sigma() == d.conclusion.sigma(), || {
        "premise store typing differs from conclusion store typing".into()
    })
}

/// The premise context must be the conclusion context extended by `x: ty`.
fn extended_context(d: &Derivation, premise: &Derivation, x: &Var, ty: &TypeExpr) -> Check {
    let env = d.conclusion.env();
    ensure(!env.contains(x), || {
        format!("{x} is already bound in the context")
    })?;
    match premise.conclusion.env().split_last() {
        Some((y, t, rest)) if y == x && t.alpha_eq(ty) && rest == env => {}
        _ => {
            return Err(format!(
                "premise context is not the conclusion context extended with {x}"
            ))
        }
    }
    ensure(premise.conclusion.sigma() == d.conclusion.sigma(), || {
        "premise store typing differs from conclusion store typing".into()
    })
}

fn typed(d: &Derivation) -> Result<(&Term, &TypeExpr), String> {
    match &d.conclusion {
        Judgment::Typed { term, ty, .. } => Ok((term, ty)),
        _ => Err(format!("{} concludes a typing judgment for a term", d.rule)),
    }
}

fn typed_var(d: &Derivation) -> Result<(&Var, &TypeExpr), String> {
    match typed(d)? {
        (Term::Var(x), ty) => Ok((x, ty)),
        _ => Err(format!("{} applies to a variable", d.rule)),
    }
}

fn defs(d: &Derivation) -> Result<(&Def, &TypeExpr), String> {
    match &d.conclusion {
        Judgment::Defs { defs, ty, .. } => Ok((defs, ty)),
        _ => Err(format!("{} concludes a definition typing judgment", d.rule)),
    }
}

fn sub(d: &Derivation) -> Result<(&TypeExpr, &TypeExpr), String> {
    match &d.conclusion {
        Judgment::Sub { lower, upper, .. } => Ok((lower, upper)),
        _ => Err(format!("{} concludes a subtyping judgment", d.rule)),
    }
}

/// Free variables of the judgment must be bound in its context.
fn scoped(j: &Judgment) -> Check {
    let mut fv = BTreeSet::new();
    match j {
        Judgment::Typed { term, ty, .. } => {
            fv.extend(term.free_vars());
            fv.extend(ty.free_vars());
        }
        Judgment::Defs { defs, ty, .. } => {
            fv.extend(defs.free_vars());
            fv.extend(ty.free_vars());
        }
        Judgment::Sub { lower, upper, .. } => {
            fv.extend(lower.free_vars());
            fv.extend(upper.free_vars());
        }
    }
    match fv.iter().find(|x| !j.env().contains(x)) {
        Some(x) => Err(format!(
            "{x} is free in the judgment but not bound in its context"
        )),
        None => Ok(()),
    }
}

fn check_node(d: &Derivation) -> Check {
    scoped(&d.conclusion)?;
    let p = &d.premises;
    let env: &TypeEnv = d.conclusion.env();
    let sigma: &StoreTyping = d.conclusion.sigma();
    match d.rule {
        Rule::Var => {
            arity(d, 0)?;
            let (x, ty) = typed_var(d)?;
            match env.lookup(x) {
                Some(t) => same_type(ty, t, "Var type differs from the context entry"),
                None => Err(format!("{x} is not bound in the context")),
            }
        }
        Rule::Loc => {
            arity(d, 0)?;
            match typed(d)? {
                (Term::Val(Value::Loc(l)), TypeExpr::RefT(t)) => match sigma.get(*l) {
                    Some(s) => same_type(t, s, "Loc type differs from the store typing"),
                    None => Err(format!("location {} is not in the store typing", l.0)),
                },
                _ => Err("Loc types a location with a Ref type".into()),
            }
        }
        Rule::AllI => {
            arity(d, 1)?;
            match typed(d)? {
                (Term::Val(Value::Lam(x, s, body)), TypeExpr::All(y, s2, u)) => {
                    same_type(s2, s, "All-I parameter type")?;
                    ensure(!s.occurs_free(x), || {
                        format!("{x} occurs free in its own parameter type")
                    })?;
                    extended_context(d, &p[0], x, s)?;
                    let (t, u2) = typed(&p[0])?;
                    ensure(t.alpha_eq(&**body), || {
                        "premise is not about the lambda body".into()
                    })?;
                    same_type(u2, &u.subst(y, x), "All-I result type")
                }
                _ => Err("All-I types a lambda with a function type".into()),
            }
        }
        Rule::AllE => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            let (term, ty) = typed(d)?;
            let Term::App(x, y) = term else {
                return Err("All-E types an application".into());
            };
            let (x2, fty) = typed_var(&p[0])?;
            let (y2, aty) = typed_var(&p[1])?;
            ensure(x2 == x && y2 == y, || {
                "premises are not about the operands".into()
            })?;
            match fty {
                TypeExpr::All(z, s, t) => {
                    same_type(aty, s, "argument type")?;
                    same_type(ty, &t.subst(z, y), "All-E result type")
                }
                _ => Err("function premise does not have a function type".into()),
            }
        }
        Rule::ObjI => {
            arity(d, 1)?;
            match typed(d)? {
                (Term::Val(Value::Obj(x, t, ds)), ty) => {
                    same_type(
                        ty,
                        &TypeExpr::Rec(x.clone(), Box::new(t.clone())),
                        "{}-I type",
                    )?;
                    extended_context(d, &p[0], x, t)?;
                    let (ds2, t2) = defs(&p[0])?;
                    ensure(ds2.alpha_eq(ds), || {
                        "premise is not about the object's definitions".into()
                    })?;
                    same_type(t2, t, "definitions type")
                }
                _ => Err("{}-I types an object".into()),
            }
        }
        Rule::ObjE => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            let (term, ty) = typed(d)?;
            let Term::FieldSel(x, a) = term else {
                return Err("{}-E types a field selection".into());
            };
            let (x2, xt) = typed_var(&p[0])?;
            ensure(x2 == x, || {
                "premise is not about the selected variable".into()
            })?;
            match xt {
                TypeExpr::FieldDecl(b, t) if b == a => same_type(ty, t, "{}-E field type"),
                _ => Err(format!(
                    "premise does not give {x} a field declaration for {a}"
                )),
            }
        }
        Rule::Let => {
            arity(d, 2)?;
            let (term, ty) = typed(d)?;
            let Term::Let(x, t, u) = term else {
                return Err("Let types a let".into());
            };
            same_contexts(d, &p[0])?;
            let (t2, tt) = typed(&p[0])?;
            ensure(t2.alpha_eq(&**t), || {
                "first premise is not about the bound term".into()
            })?;
            extended_context(d, &p[1], x, tt)?;
            let (u2, ut) = typed(&p[1])?;
            ensure(u2.alpha_eq(&**u), || {
                "second premise is not about the body".into()
            })?;
            same_type(ut, ty, "Let body type")?;
            ensure(!ty.occurs_free(x), || {
                format!("{x} occurs free in the let's type")
            })
        }
        Rule::RecI => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            let (x, ty) = typed_var(d)?;
            let (x2, t) = typed_var(&p[0])?;
            ensure(x2 == x, || "premise is about another variable".into())?;
            match ty {
                TypeExpr::Rec(z, body) => same_type(t, &body.subst(z, x), "Rec-I body"),
                _ => Err("Rec-I concludes a recursive type".into()),
            }
        }
        Rule::RecE => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            let (x, ty) = typed_var(d)?;
            let (x2, t) = typed_var(&p[0])?;
            ensure(x2 == x, || "premise is about another variable".into())?;
            match t {
                TypeExpr::Rec(z, body) => same_type(ty, &body.subst(z, x), "Rec-E opening"),
                _ => Err("Rec-E premise has a recursive type".into()),
            }
        }
        Rule::AndI => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            let (x, ty) = typed_var(d)?;
            let (x1, t1) = typed_var(&p[0])?;
            let (x2, t2) = typed_var(&p[1])?;
            ensure(x1 == x && x2 == x, || {
                "premises are about another variable".into()
            })?;
            match ty {
                TypeExpr::And(a, b) => {
                    same_type(t1, a, "left conjunct")?;
                    same_type(t2, b, "right conjunct")
                }
                _ => Err("&-I concludes an intersection".into()),
            }
        }
        Rule::Sub => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            let (term, ty) = typed(d)?;
            let (t2, ty2) = typed(&p[0])?;
            ensure(t2.alpha_eq(term), || {
                "typing premise is about another term".into()
            })?;
            let (lo, hi) = sub(&p[1])?;
            same_type(lo, ty2, "subtyping premise lower side")?;
            same_type(hi, ty, "subtyping premise upper side")
        }
        Rule::FldI => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            match defs(d)? {
                (Def::Field(a, t), TypeExpr::FieldDecl(b, ty)) if a == b => {
                    let (t2, ty2) = typed(&p[0])?;
                    ensure(t2.alpha_eq(&**t), || {
                        "premise is not about the field body".into()
                    })?;
                    same_type(ty2, ty, "field type")
                }
                _ => Err("Fld-I types {a = t} with {a: T}".into()),
            }
        }
        Rule::TypI => {
            arity(d, 0)?;
            match defs(d)? {
                (Def::Type(a, t), TypeExpr::TypeDecl(b, lo, hi)) if a == b => {
                    same_type(lo, t, "lower bound")?;
                    same_type(hi, t, "upper bound")
                }
                _ => Err("Typ-I types {A = T} with {A: T..T}".into()),
            }
        }
        Rule::AndDefI => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            match defs(d)? {
                (Def::And(d1, d2), TypeExpr::And(t1, t2)) => {
                    let (e1, u1) = defs(&p[0])?;
                    let (e2, u2) = defs(&p[1])?;
                    ensure(e1.alpha_eq(&**d1) && e2.alpha_eq(&**d2), || {
                        "premises are not about the parts".into()
                    })?;
                    same_type(u1, t1, "left part")?;
                    same_type(u2, t2, "right part")?;
                    let l1: BTreeSet<_> = d1.labels().into_iter().collect();
                    match d2.labels().into_iter().find(|l| l1.contains(l)) {
                        Some(l) => Err(format!("label {l} is defined on both sides")),
                        None => Ok(()),
                    }
                }
                _ => Err("AndDef-I types d1 /\\ d2 with T1 /\\ T2".into()),
            }
        }
        Rule::RefI => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            match typed(d)? {
                (Term::RefNew(x, t), TypeExpr::RefT(u)) => {
                    same_type(u, t, "Ref-I reference type")?;
                    let (x2, t2) = typed_var(&p[0])?;
                    ensure(x2 == x, || "premise is about another variable".into())?;
                    same_type(t2, t, "initial value type")
                }
                _ => Err("Ref-I types `ref x T` with Ref T".into()),
            }
        }
        Rule::RefE => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            let (term, ty) = typed(d)?;
            let Term::Deref(x) = term else {
                return Err("Ref-E types a dereference".into());
            };
            let (x2, t) = typed_var(&p[0])?;
            ensure(x2 == x, || "premise is about another variable".into())?;
            match t {
                TypeExpr::RefT(u) => same_type(ty, u, "dereferenced type"),
                _ => Err("Ref-E premise has a Ref type".into()),
            }
        }
        Rule::Asgn => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            let (term, ty) = typed(d)?;
            let Term::Asgn(x, y) = term else {
                return Err("Asgn types an assignment".into());
            };
            let (x2, xt) = typed_var(&p[0])?;
            let (y2, yt) = typed_var(&p[1])?;
            ensure(x2 == x && y2 == y, || {
                "premises are not about the operands".into()
            })?;
            match xt {
                TypeExpr::RefT(u) => {
                    same_type(yt, u, "assigned value type")?;
                    same_type(ty, u, "assignment type")
                }
                _ => Err("Asgn target premise has a Ref type".into()),
            }
        }
        Rule::Top => {
            arity(d, 0)?;
            let (_, hi) = sub(d)?;
            ensure(*hi == TypeExpr::Top, || "Top concludes T <: Top".into())
        }
        Rule::Bot => {
            arity(d, 0)?;
            let (lo, _) = sub(d)?;
            ensure(*lo == TypeExpr::Bot, || "Bot concludes Bot <: T".into())
        }
        Rule::Refl => {
            arity(d, 0)?;
            let (lo, hi) = sub(d)?;
            same_type(lo, hi, "Refl sides")
        }
        Rule::Trans => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            let (s, u) = sub(d)?;
            let (s2, t1) = sub(&p[0])?;
            let (t2, u2) = sub(&p[1])?;
            same_type(s2, s, "Trans lower")?;
            same_type(t1, t2, "Trans middle")?;
            same_type(u2, u, "Trans upper")
        }
        Rule::And1 | Rule::And2 => {
            arity(d, 0)?;
            match sub(d)? {
                (TypeExpr::And(a, b), hi) => {
                    let part = if d.rule == Rule::And1 { a } else { b };
                    same_type(hi, part, "selected conjunct")
                }
                _ => Err("And-elimination needs an intersection on the left".into()),
            }
        }
        Rule::SubAnd => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            match sub(d)? {
                (s, TypeExpr::And(a, b)) => {
                    let (s1, a1) = sub(&p[0])?;
                    let (s2, b1) = sub(&p[1])?;
                    same_type(s1, s, "left premise lower")?;
                    same_type(s2, s, "right premise lower")?;
                    same_type(a1, a, "left conjunct")?;
                    same_type(b1, b, "right conjunct")
                }
                _ => Err("<:-And needs an intersection on the right".into()),
            }
        }
        Rule::SubSel | Rule::SelSub => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            let (lo, hi) = sub(d)?;
            let (sel, other) = if d.rule == Rule::SubSel {
                (hi, lo)
            } else {
                (lo, hi)
            };
            let TypeExpr::Sel(x, a) = sel else {
                return Err(format!("{} needs a type selection", d.rule));
            };
            let (x2, xt) = typed_var(&p[0])?;
            ensure(x2 == x, || "premise is about another variable".into())?;
            match xt {
                TypeExpr::TypeDecl(b, s, t) if b == a => {
                    let bound = if d.rule == Rule::SubSel { s } else { t };
                    same_type(other, bound, "selection bound")
                }
                _ => Err(format!("premise does not give {x} a declaration for {a}")),
            }
        }
        Rule::FldFld => {
            arity(d, 1)?;
            same_contexts(d, &p[0])?;
            match sub(d)? {
                (TypeExpr::FieldDecl(a, t), TypeExpr::FieldDecl(b, u)) if a == b => {
                    let (t1, u1) = sub(&p[0])?;
                    same_type(t1, t, "field lower")?;
                    same_type(u1, u, "field upper")
                }
                _ => Err("Fld-<:-Fld relates two declarations of the same field".into()),
            }
        }
        Rule::TypTyp => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            match sub(d)? {
                (TypeExpr::TypeDecl(a, s1, t1), TypeExpr::TypeDecl(b, s2, t2)) if a == b => {
                    let (l0, l1) = sub(&p[0])?;
                    same_type(l0, s2, "lower bounds (contravariant) left")?;
                    same_type(l1, s1, "lower bounds (contravariant) right")?;
                    let (h0, h1) = sub(&p[1])?;
                    same_type(h0, t1, "upper bounds left")?;
                    same_type(h1, t2, "upper bounds right")
                }
                _ => Err("Typ-<:-Typ relates two declarations of the same type member".into()),
            }
        }
        Rule::AllAll => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            match sub(d)? {
                (TypeExpr::All(x, s1, t1), TypeExpr::All(y, s2, t2)) => {
                    let (a, b) = sub(&p[0])?;
                    same_type(a, s2, "parameter (contravariant) left")?;
                    same_type(b, s1, "parameter (contravariant) right")?;
                    let Some((z, zt, rest)) = p[1].conclusion.env().split_last() else {
                        return Err("result premise context is not extended".into());
                    };
                    ensure(rest == env && p[1].conclusion.sigma() == sigma, || {
                        "result premise context is not the conclusion context extended".into()
                    })?;
                    ensure(!env.contains(z), || {
                        format!("{z} is already bound in the context")
                    })?;
                    same_type(zt, s2, "bound parameter type")?;
                    let fresh = |t: &TypeExpr, b: &Var| {
                        let mut fv = t.free_vars();
                        fv.remove(b);
                        !fv.contains(z)
                    };
                    ensure(fresh(t1, x) && fresh(t2, y), || format!("{z} is not fresh"))?;
                    let (r1, r2) = sub(&p[1])?;
                    same_type(r1, &t1.subst(x, z), "result left")?;
                    same_type(r2, &t2.subst(y, z), "result right")
                }
                _ => Err("All-<:-All relates two function types".into()),
            }
        }
        Rule::RefSub => {
            arity(d, 2)?;
            same_contexts(d, &p[0])?;
            same_contexts(d, &p[1])?;
            match sub(d)? {
                (TypeExpr::RefT(t), TypeExpr::RefT(u)) => {
                    let (a, b) = sub(&p[0])?;
                    same_type(a, t, "covariant premise left")?;
                    same_type(b, u, "covariant premise right")?;
                    let (c, e) = sub(&p[1])?;
                    same_type(c, u, "contravariant premise left")?;
                    same_type(e, t, "contravariant premise right")
                }
                _ => Err("Ref-Sub relates two reference types".into()),
            }
        }
    }
}
