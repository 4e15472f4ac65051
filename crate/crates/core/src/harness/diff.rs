//! Cross-checking the stack machine against the context machine.

use std::collections::BTreeMap;

use super::Verdict;
use crate::eval::{reify_stack, run, RunEnd, Semantics, Trace};
use crate::parser::pretty_term;
use crate::syntax::{Binding, Def, Loc, Term, Value, Var};

fn rename_locs_term(t: &Term, m: &BTreeMap<Loc, Loc>) -> Term {
    match t {
        Term::Val(v) => Term::Val(rename_locs_value(v, m)),
        Term::Let(x, a, b) => {
            Term::let_in(x.clone(), rename_locs_term(a, m), rename_locs_term(b, m))
        }
        other => other.clone(),
    }
}

fn rename_locs_value(v: &Value, m: &BTreeMap<Loc, Loc>) -> Value {
    match v {
        Value::Loc(l) => Value::Loc(m.get(l).copied().unwrap_or(*l)),
        Value::Lam(x, ty, body) => {
            Value::Lam(x.clone(), ty.clone(), Box::new(rename_locs_term(body, m)))
        }
        Value::Obj(x, ty, d) => Value::Obj(x.clone(), ty.clone(), rename_locs_defs(d, m)),
    }
}

fn rename_locs_defs(d: &Def, m: &BTreeMap<Loc, Loc>) -> Def {
    match d {
        Def::Field(a, t) => Def::Field(a.clone(), Box::new(rename_locs_term(t, m))),
        Def::Type(..) => d.clone(),
        Def::And(a, b) => Def::And(
            Box::new(rename_locs_defs(a, m)),
            Box::new(rename_locs_defs(b, m)),
        ),
    }
}

fn locs_term(t: &Term, out: &mut Vec<Loc>) {
    match t {
        Term::Val(v) => locs_value(v, out),
        Term::Let(_, a, b) => {
            locs_term(a, out);
            locs_term(b, out);
        }
        _ => {}
    }
}

fn locs_value(v: &Value, out: &mut Vec<Loc>) {
    match v {
        Value::Loc(l) => {
            if !out.contains(l) {
                out.push(*l);
            }
        }
        Value::Lam(_, _, body) => locs_term(body, out),
        Value::Obj(_, _, d) => locs_defs(d, out),
    }
}

fn locs_defs(d: &Def, out: &mut Vec<Loc>) {
    match d {
        Def::Field(_, t) => locs_term(t, out),
        Def::Type(..) => {}
        Def::And(a, b) => {
            locs_defs(a, out);
            locs_defs(b, out);
        }
    }
}

/// Stored variables are identified by the position of their binder on the
/// let spine; anything else keeps its name.
#[derive(Clone, PartialEq, Eq, Debug, PartialOrd, Ord)]
enum Slot {
    Spine(usize),
    Free(Var),
}

/// Reified answer with locations numbered by first occurrence, and the store
/// over those numbers.
fn canonical(trace: &Trace) -> (Term, Vec<(Loc, Slot)>) {
    let last = trace.final_state();
    let term = reify_stack(last);
    let mut order = Vec::new();
    locs_term(&term, &mut order);
    for (l, _) in last.store.iter() {
        if !order.contains(&l) {
            order.push(l);
        }
    }
    let m: BTreeMap<Loc, Loc> = order
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, Loc(i)))
        .collect();
    let mut spine = Vec::new();
    let mut cur = &term;
    while let Term::Let(x, b, u) = cur {
        if !matches!(**b, Term::Val(_)) {
            break;
        }
        spine.push(x.clone());
        cur = u;
    }
    let mut store: Vec<(Loc, Slot)> = last
        .store
        .iter()
        .map(|(l, x)| {
            let slot = spine
                .iter()
                .rposition(|y| y == x)
                .map_or_else(|| Slot::Free(x.clone()), Slot::Spine);
            (m[&l], slot)
        })
        .collect();
    store.sort();
    (rename_locs_term(&term, &m), store)
}

/// Compares two finished runs of the same program.
pub fn compare_traces(stack: &Trace, context: &Trace) -> Verdict {
    match (&stack.end, &context.end) {
        (RunEnd::BudgetExceeded, RunEnd::BudgetExceeded) => Verdict::Pass,
        (RunEnd::Stuck { reason: a }, RunEnd::Stuck { reason: b }) => {
            if std::mem::discriminant(a) == std::mem::discriminant(b) {
                Verdict::Pass
            } else {
                Verdict::fail(format!("stuck differently: `{a}` versus `{b}`"))
            }
        }
        (RunEnd::Answer, RunEnd::Answer) => {
            let (t1, s1) = canonical(stack);
            let (t2, s2) = canonical(context);
            if !t1.alpha_eq(&t2) {
                return Verdict::fail(format!(
                    "answers differ: `{}` versus `{}`",
                    pretty_term(&t1),
                    pretty_term(&t2)
                ));
            }
            if s1 != s2 {
                return Verdict::fail(format!(
                    "stores differ: {} versus {}",
                    stack.final_state().store,
                    context.final_state().store
                ));
            }
            Verdict::Pass
        }
        (a, b) => Verdict::fail(format!("runs ended differently: {a:?} versus {b:?}")),
    }
}

/// Runs both machines and compares the outcomes. The stack machine spends
/// extra steps moving values onto the stack, so a run that exhausts the
/// budget while the other finishes gets four times the budget to catch up.
pub fn differential_run(t: &Term, max_steps: usize) -> Verdict {
    let mut a = run(t, Semantics::Stack, max_steps);
    let mut b = run(t, Semantics::Context, max_steps);
    match (&a.end, &b.end) {
        (RunEnd::BudgetExceeded, RunEnd::Answer | RunEnd::Stuck { .. }) => {
            a = run(t, Semantics::Stack, max_steps.saturating_mul(4));
        }
        (RunEnd::Answer | RunEnd::Stuck { .. }, RunEnd::BudgetExceeded) => {
            b = run(t, Semantics::Context, max_steps.saturating_mul(4));
        }
        _ => {}
    }
    compare_traces(&a, &b)
}
