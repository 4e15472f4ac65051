//! Typing of runtime structures: stores against store typings, and stacks
//! against contexts.

use super::derivation::{Derivation, Rule};
use super::env::{StoreTyping, TypeEnv};
use super::synth::Synth;
use super::{check_var, Decision, Fuel, TypeError};
use crate::eval::{Stack, Store};
use crate::syntax::{Binding, Term, TypeExpr, Value};

/// Every stored variable has the type recorded for its location.
pub fn well_typed_store(
    env: &TypeEnv,
    sigma: &StoreTyping,
    store: &Store,
    fuel: Fuel,
) -> Result<Decision<Vec<Derivation>>, TypeError> {
    let mut out = Vec::with_capacity(store.len());
    for (l, x) in store.iter() {
        let t = sigma.get(l).ok_or(TypeError::DanglingLocation(l))?;
        match check_var(env, sigma, x, t, fuel) {
            Decision::Yes(d) => out.push(d),
            Decision::No => return Ok(Decision::No),
            Decision::Unknown => return Ok(Decision::Unknown),
        }
    }
    Ok(Decision::Yes(out))
}

/// Each stack value has, precisely, the type the context gives its variable.
pub fn stack_corresponds(
    env: &TypeEnv,
    sigma: &StoreTyping,
    stack: &Stack,
    fuel: Fuel,
) -> Result<Decision<Vec<Derivation>>, TypeError> {
    let bindings = env.bindings();
    let values = stack.bindings();
    if bindings.len() != values.len() {
        return Err(TypeError::DomainMismatch {
            expected: format!("{} bindings", bindings.len()),
            found: format!("{} bindings", values.len()),
        });
    }
    for ((x, _), (y, _)) in bindings.iter().zip(values) {
        if *x != y {
            return Err(TypeError::DomainMismatch {
                expected: x.to_string(),
                found: y.to_string(),
            });
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for ((_, t), (_, v)) in bindings.iter().zip(values) {
        match precise_check(env, sigma, v, t, fuel) {
            Ok(Some(d)) => out.push(d),
            Ok(None) => return Ok(Decision::No),
            Err(TypeError::OutOfFuel) => return Ok(Decision::Unknown),
            Err(_) => return Ok(Decision::No),
        }
    }
    Ok(Decision::Yes(out))
}

/// A root-restricted derivation of `v : t`: the synthesized precise type if
/// it matches, otherwise `All-I` with the body checked against the result.
fn precise_check(
    env: &TypeEnv,
    sigma: &StoreTyping,
    v: &Value,
    t: &TypeExpr,
    fuel: Fuel,
) -> Result<Option<Derivation>, TypeError> {
    let term = Term::Val(v.clone());
    let mut synth = Synth::new(sigma, fuel);
    match synth.synth(env, &term) {
        Ok(r) if r.ty.alpha_eq(t) => return Ok(Some(r.derivation)),
        Err(TypeError::OutOfFuel) => return Err(TypeError::OutOfFuel),
        _ => {}
    }
    match (v, t) {
        (Value::Lam(_, s, _), TypeExpr::All(_, s2, _)) if s.alpha_eq(s2) => {
            let d = synth.check(env, &term, t)?;
            Ok((d.rule == Rule::AllI).then_some(d))
        }
        _ => Ok(None),
    }
}
