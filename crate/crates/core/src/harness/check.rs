//! Soundness judgments checked along concrete traces.

use std::collections::BTreeSet;

use serde::Serialize;

use super::Verdict;
use crate::eval::{
    is_answer, reify_stack, step, EvalContext, MachineState, RunEnd, Semantics, Step, StepOutcome,
    Trace,
};
use crate::parser::pretty_type;
use crate::syntax::{Binding, Term, TypeExpr, Value, Var};
use crate::typecheck::{
    check_term, precise_type_value, stack_corresponds, subtype, synthesize, validate_derivation,
    well_typed_store, Decision, Derivation, Fuel, Judgment, Rule, StoreTyping, TypeEnv, TypeError,
};

/// Counts derivations handed out by the checker and how many of them the
/// validator accepted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Certificates {
    pub accepted: usize,
    pub rejected: usize,
}

impl Certificates {
    pub fn record(&mut self, d: &Derivation) {
        if validate_derivation(d).is_valid() {
            self.accepted += 1;
        } else {
            self.rejected += 1;
        }
    }

    pub fn merge(&mut self, other: Certificates) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepCheck {
    /// Index of the state checked; 0 is the initial state.
    pub index: usize,
    pub rule: Option<String>,
    pub preservation: Verdict,
    pub store: Verdict,
    pub stack: Verdict,
    pub scoping: Verdict,
    pub sigma: StoreTyping,
}

impl StepCheck {
    pub fn verdicts(&self) -> [(&'static str, &Verdict); 4] {
        [
            ("preservation", &self.preservation),
            ("store", &self.store),
            ("stack", &self.stack),
            ("scoping", &self.scoping),
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub unknown: usize,
}

impl Summary {
    pub fn add(&mut self, v: &Verdict) {
        match v {
            Verdict::Pass => self.pass += 1,
            Verdict::Fail { .. } => self.fail += 1,
            Verdict::Unknown { .. } => self.unknown += 1,
        }
    }

    pub fn merge(&mut self, other: Summary) {
        self.pass += other.pass;
        self.fail += other.fail;
        self.unknown += other.unknown;
    }

    pub fn total(&self) -> usize {
        self.pass + self.fail + self.unknown
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceReport {
    pub steps: Vec<StepCheck>,
    pub summary: Summary,
    pub certificates: Certificates,
    pub final_sigma: StoreTyping,
}

impl TraceReport {
    /// First failing judgment, as (state index, judgment name, verdict).
    pub fn first_failure(&self) -> Option<(usize, &'static str, &Verdict)> {
        self.steps.iter().find_map(|s| {
            s.verdicts()
                .into_iter()
                .find(|(_, v)| v.is_fail())
                .map(|(name, v)| (s.index, name, v))
        })
    }
}

/// Typing context for one state of a trace.
#[derive(Clone, Debug)]
pub(crate) struct Typing {
    pub env: TypeEnv,
    pub sigma: StoreTyping,
    /// Types of the stack machine's hole frames; see `frame_types`.
    pub frames: Vec<Option<TypeExpr>>,
}

/// Bound terms of the lets the stack machine is evaluating inside, outermost
/// first, ending with the let whose bound value is about to be pushed.
fn hole_frames(t: &Term) -> Vec<&Term> {
    let mut out = Vec::new();
    let mut cur = t;
    while let Term::Let(_, b, _) = cur {
        match **b {
            Term::Var(_) => break,
            Term::Val(_) => {
                out.push(&**b);
                break;
            }
            _ => {
                out.push(&**b);
                cur = b;
            }
        }
    }
    out
}

/// Types of the hole frames of a state. A frame keeps the first type its
/// bound term synthesized to: reduction inside the bound term can reach
/// terms, such as an inlined function body, whose most specific type
/// mentions a local binder even though the expected type does not.
fn frame_types(
    prev: &[Option<TypeExpr>],
    kept: usize,
    env: &TypeEnv,
    sigma: &StoreTyping,
    term: &Term,
    fuel: Fuel,
) -> Vec<Option<TypeExpr>> {
    hole_frames(term)
        .iter()
        .enumerate()
        .map(|(j, b)| match prev.get(j) {
            Some(Some(r)) if j < kept => Some(r.clone()),
            _ => synthesize(env, sigma, b, fuel).ok().map(|r| r.ty),
        })
        .collect()
}

/// Type for a value pushed onto the stack. A lambda whose frame recorded a
/// function type keeps it when `All-I` derives it; otherwise the value gets
/// its synthesized precise type.
fn pushed_type(
    env: &TypeEnv,
    sigma: &StoreTyping,
    v: &Value,
    frame: Option<&TypeExpr>,
    fuel: Fuel,
    certs: &mut Certificates,
) -> Result<TypeExpr, TypeError> {
    if let (Value::Lam(_, s, _), Some(t @ TypeExpr::All(_, s2, _))) = (v, frame) {
        if s.alpha_eq(s2) {
            if let Ok(d) = check_term(env, sigma, &Term::Val(v.clone()), t, fuel) {
                if d.rule == Rule::AllI {
                    certs.record(&d);
                    return Ok(t.clone());
                }
            }
        }
    }
    let r = precise_type_value(env, sigma, v, fuel)?;
    certs.record(&r.derivation);
    Ok(r.ty)
}

/// Extends the typing of the previous state across one step: stack growth
/// adds the type of the new value, a `Ref` step adds its declared type.
fn advance(
    prev: &Typing,
    before: &MachineState,
    step: &Step,
    semantics: Semantics,
    fuel: Fuel,
    certs: &mut Certificates,
) -> Result<Typing, Verdict> {
    let mut sigma = prev.sigma.clone();
    if let Some((l, t)) = &step.alloc {
        sigma.insert(*l, t.clone());
    }
    let mut env = prev.env.clone();
    let frame = prev.frames.get(step.depth).and_then(Option::as_ref);
    for (x, v) in &step.state.stack.bindings()[before.stack.len()..] {
        match pushed_type(&env, &sigma, v, frame, fuel, certs) {
            Ok(t) => env = env.extend(x.clone(), t),
            Err(TypeError::OutOfFuel) => {
                return Err(Verdict::unknown(format!("typing the value bound to `{x}`")))
            }
            Err(e) => {
                return Err(Verdict::fail(format!(
                    "value bound to `{x}` does not type: {e}"
                )))
            }
        }
    }
    let frames = match semantics {
        Semantics::Stack => frame_types(
            &prev.frames,
            step.depth,
            &env,
            &sigma,
            &step.state.term,
            fuel,
        ),
        Semantics::Context => Vec::new(),
    };
    Ok(Typing { env, sigma, frames })
}

pub(crate) fn replay(
    trace: &Trace,
    fuel: Fuel,
    certs: &mut Certificates,
) -> (Vec<Typing>, Option<Verdict>) {
    let (env, sigma) = (TypeEnv::new(), StoreTyping::new());
    let frames = match trace.semantics {
        Semantics::Stack => frame_types(&[], 0, &env, &sigma, &trace.initial.term, fuel),
        Semantics::Context => Vec::new(),
    };
    let mut out = vec![Typing { env, sigma, frames }];
    let mut before = &trace.initial;
    for s in &trace.steps {
        match advance(
            out.last().expect("nonempty"),
            before,
            s,
            trace.semantics,
            fuel,
            certs,
        ) {
            Ok(t) => out.push(t),
            Err(v) => return (out, Some(v)),
        }
        before = &s.state;
    }
    (out, None)
}

/// Like `check_term`, but types each hole frame at its recorded type.
fn check_framed(
    env: &TypeEnv,
    sigma: &StoreTyping,
    t: &Term,
    ty: &TypeExpr,
    frames: &[Option<TypeExpr>],
    fuel: Fuel,
) -> Result<Derivation, TypeError> {
    if let (Term::Let(x, b, u), Some(Some(r))) = (t, frames.first()) {
        if !env.contains(x) && !ty.occurs_free(x) {
            let d1 = check_framed(env, sigma, b, r, &frames[1..], fuel)?;
            let d2 = check_term(&env.extend(x.clone(), r.clone()), sigma, u, ty, fuel)?;
            let conclusion = Judgment::Typed {
                env: env.clone(),
                sigma: sigma.clone(),
                term: t.clone(),
                ty: ty.clone(),
            };
            return Ok(Derivation::new(Rule::Let, conclusion, vec![d1, d2]));
        }
    }
    check_term(env, sigma, t, ty, fuel)
}

fn preservation(
    ty: &Typing,
    term: &Term,
    t0: &TypeExpr,
    fuel: Fuel,
    certs: &mut Certificates,
) -> Verdict {
    let frames = &ty.frames;
    let mut unknown = false;
    match synthesize(&ty.env, &ty.sigma, term, fuel) {
        Ok(r) => {
            certs.record(&r.derivation);
            match subtype(&ty.env, &ty.sigma, &r.ty, t0, fuel) {
                Decision::Yes(d) => {
                    certs.record(&d);
                    return Verdict::Pass;
                }
                Decision::Unknown => unknown = true,
                Decision::No => {}
            }
        }
        Err(TypeError::OutOfFuel) => unknown = true,
        Err(_) => {}
    }
    if frames.iter().any(Option::is_some) {
        if let Ok(d) = check_framed(&ty.env, &ty.sigma, term, t0, frames, fuel) {
            if validate_derivation(&d).is_valid() {
                certs.record(&d);
                return Verdict::Pass;
            }
        }
    }
    match check_term(&ty.env, &ty.sigma, term, t0, fuel) {
        Ok(d) => {
            certs.record(&d);
            Verdict::Pass
        }
        Err(TypeError::OutOfFuel) => {
            Verdict::unknown("checking the successor against the original type")
        }
        Err(_) if unknown => {
            Verdict::unknown("comparing the successor type with the original type")
        }
        Err(e) => Verdict::fail(format!(
            "successor does not have type {}: {e}",
            pretty_type(t0)
        )),
    }
}

fn decision_verdict(
    r: Result<Decision<Vec<Derivation>>, TypeError>,
    what: &str,
    certs: &mut Certificates,
) -> Verdict {
    match r {
        Ok(Decision::Yes(ds)) => {
            ds.iter().for_each(|d| certs.record(d));
            Verdict::Pass
        }
        Ok(Decision::No) => Verdict::fail(format!("{what} does not hold")),
        Ok(Decision::Unknown) => Verdict::unknown(what.to_string()),
        Err(TypeError::OutOfFuel) => Verdict::unknown(what.to_string()),
        Err(e) => Verdict::fail(format!("{what}: {e}")),
    }
}

/// Let-value binders along the spine of a term.
fn spine_binders(t: &Term) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    let mut cur = t;
    while let Term::Let(x, b, u) = cur {
        if !matches!(**b, Term::Val(_)) {
            break;
        }
        out.insert(x.clone());
        cur = u;
    }
    out
}

fn scoping(s: &MachineState) -> Verdict {
    let spine = spine_binders(&s.term);
    for (l, x) in s.store.iter() {
        if !s.stack.contains(x) && !spine.contains(x) {
            return Verdict::fail(format!(
                "location {} holds `{x}`, which is out of scope",
                l.0
            ));
        }
    }
    Verdict::Pass
}

/// Re-types every state of a trace against the type of its initial term.
pub fn check_trace_preservation(trace: &Trace, t0: &TypeExpr, fuel: Fuel) -> TraceReport {
    let mut certs = Certificates::default();
    let (typings, broken) = replay(trace, fuel, &mut certs);
    let mut steps = Vec::new();
    let mut summary = Summary::default();
    let states: Vec<&MachineState> = trace.states().collect();
    for (i, ty) in typings.iter().enumerate() {
        let s = states[i];
        let mut pres = if i == 0 {
            Verdict::Pass
        } else {
            preservation(ty, &s.term, t0, fuel, &mut certs)
        };
        if i > 0 && !typings[i - 1].sigma.is_extended_by(&ty.sigma) {
            pres = Verdict::fail("store typing shrank");
        }
        let store = decision_verdict(
            well_typed_store(&ty.env, &ty.sigma, &s.store, fuel),
            "well-typed store",
            &mut certs,
        );
        let stack = match trace.semantics {
            Semantics::Stack => decision_verdict(
                stack_corresponds(&ty.env, &ty.sigma, &s.stack, fuel),
                "stack correspondence",
                &mut certs,
            ),
            Semantics::Context => Verdict::Pass,
        };
        let check = StepCheck {
            index: i,
            rule: (i > 0).then(|| trace.steps[i - 1].rule.to_string()),
            preservation: pres,
            store,
            stack,
            scoping: scoping(s),
            sigma: ty.sigma.clone(),
        };
        check.verdicts().iter().for_each(|(_, v)| summary.add(v));
        steps.push(check);
    }
    if let Some(v) = broken {
        let i = typings.len();
        let check = StepCheck {
            index: i,
            rule: Some(trace.steps[i - 1].rule.to_string()),
            preservation: v,
            store: Verdict::Pass,
            stack: Verdict::Pass,
            scoping: scoping(states[i]),
            sigma: typings.last().expect("nonempty").sigma.clone(),
        };
        check.verdicts().iter().for_each(|(_, v)| summary.add(v));
        steps.push(check);
    }
    TraceReport {
        steps,
        summary,
        certificates: certs,
        final_sigma: typings.last().expect("nonempty").sigma.clone(),
    }
}

/// A state is an answer or can take a step.
pub fn check_progress(state: &MachineState, semantics: Semantics) -> Verdict {
    if is_answer(&reify_stack(state)) {
        return Verdict::Pass;
    }
    match step(semantics, state) {
        StepOutcome::Stepped(_) => Verdict::Pass,
        StepOutcome::Answer => Verdict::fail("no rule applies, but the term is not an answer"),
        StepOutcome::Stuck(r) => Verdict::fail(format!("stuck: {r}")),
    }
}

fn bound_value(s: &MachineState, semantics: Semantics, x: &Var) -> Option<Value> {
    match semantics {
        Semantics::Stack => s.stack.lookup(x).cloned(),
        Semantics::Context => EvalContext::decompose(&s.term).0.lookup(x).cloned(),
    }
}

/// Operands of every elimination step are values of the right form.
pub fn check_canonical_forms(trace: &Trace, fuel: Fuel) -> Verdict {
    if let RunEnd::Stuck { reason } = &trace.end {
        return Verdict::fail(format!("run got stuck: {reason}"));
    }
    let mut certs = Certificates::default();
    let (typings, _) = replay(trace, fuel, &mut certs);
    let states: Vec<&MachineState> = trace.states().collect();
    for (i, st) in trace.steps.iter().enumerate() {
        let before = states[i];
        let Some(ty) = typings.get(i) else { break };
        let v = match &st.redex {
            Term::App(x, _) | Term::FieldSel(x, _) | Term::Deref(x) | Term::Asgn(x, _) => {
                (x, bound_value(before, trace.semantics, x))
            }
            _ => continue,
        };
        let fail = |what: &str| Verdict::fail(format!("step {}: `{}` {what}", i + 1, v.0));
        match (&st.redex, &v.1) {
            (Term::App(x, _), Some(Value::Lam(_, param, _))) => {
                if let Some(TypeExpr::All(_, dom, _)) = ty.env.lookup(x) {
                    match subtype(&ty.env, &ty.sigma, dom, param, fuel) {
                        Decision::Yes(_) => {}
                        Decision::No => {
                            return fail("has a parameter type narrower than its declared domain")
                        }
                        Decision::Unknown => {
                            return Verdict::unknown(format!("step {}: parameter type", i + 1))
                        }
                    }
                }
            }
            (Term::FieldSel(_, a), Some(Value::Obj(_, _, ds))) if ds.field_body(a).is_some() => {}
            (Term::Deref(_) | Term::Asgn(..), Some(Value::Loc(l))) => {
                if !before.store.contains(*l) || ty.sigma.get(*l).is_none() {
                    return fail("is a location missing from the store or its typing");
                }
            }
            (Term::App(..), _) => return fail("is not bound to a lambda"),
            (Term::FieldSel(_, a), _) => {
                return fail(&format!("is not bound to an object with field `{a}`"))
            }
            _ => return fail("is not bound to a location"),
        }
    }
    Verdict::Pass
}
