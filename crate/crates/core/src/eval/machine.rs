use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::state::{fresh_location, Stack, Store};
use crate::parser::{pretty_term, pretty_value};
use crate::syntax::{fresh_var, Binding, Label, Loc, Term, TypeExpr, Value, Var};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Let-bound values live on an explicit stack.
    Stack,
    /// Reduction under evaluation contexts.
    Context,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Stack => "stack",
            Semantics::Context => "context",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct MachineState {
    /// Always empty for the context machine.
    pub stack: Stack,
    pub store: Store,
    pub term: Term,
}

impl MachineState {
    pub fn initial(term: Term) -> MachineState {
        MachineState {
            stack: Stack::new(),
            store: Store::new(),
            term,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum StepRule {
    Project,
    Apply,
    #[serde(rename = "Let-Var")]
    LetVar,
    #[serde(rename = "Let-Value")]
    LetValue,
    #[serde(rename = "Let-Let")]
    LetLet,
    Ref,
    Store,
    Deref,
}

impl StepRule {
    pub fn name(self) -> &'static str {
        match self {
            StepRule::Project => "Project",
            StepRule::Apply => "Apply",
            StepRule::LetVar => "Let-Var",
            StepRule::LetValue => "Let-Value",
            StepRule::LetLet => "Let-Let",
            StepRule::Ref => "Ref",
            StepRule::Store => "Store",
            StepRule::Deref => "Deref",
        }
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StuckReason {
    ExpectedLambda {
        var: Var,
        found: String,
    },
    ExpectedField {
        var: Var,
        label: Label,
        found: String,
    },
    ExpectedLocation {
        var: Var,
        found: String,
    },
    UnboundLocation {
        loc: Loc,
    },
    UnboundVariable {
        var: Var,
    },
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckReason::ExpectedLambda { var, found } => {
                write!(f, "`{var}` should be bound to a lambda, found `{found}`")
            }
            StuckReason::ExpectedField { var, label, found } => {
                write!(
                    f,
                    "`{var}` should be bound to an object with field `{label}`, found `{found}`"
                )
            }
            StuckReason::ExpectedLocation { var, found } => {
                write!(f, "`{var}` should be bound to a location, found `{found}`")
            }
            StuckReason::UnboundLocation { loc } => {
                write!(f, "location {} is not in the store", loc.0)
            }
            StuckReason::UnboundVariable { var } => write!(f, "`{var}` is not bound to a value"),
        }
    }
}

/// One reduction step.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Step {
    pub rule: StepRule,
    /// How many enclosing lets the step happened under.
    pub depth: usize,
    /// The redex, before reduction.
    pub redex: Term,
    /// Location allocated by a `Ref` step, with the declared type.
    pub alloc: Option<(Loc, TypeExpr)>,
    pub state: MachineState,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepOutcome {
    Stepped(Step),
    Answer,
    Stuck(StuckReason),
}

/// `n ::= x | v | let x = v in n`
pub fn is_answer(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Val(_) => true,
        Term::Let(_, bound, body) => matches!(**bound, Term::Val(_)) && is_answer(body),
        _ => false,
    }
}

/// Wraps the term in the stack's bindings.
pub fn reify_stack(s: &MachineState) -> Term {
    s.stack
        .bindings()
        .iter()
        .rev()
        .fold(s.term.clone(), |t, (x, v)| {
            Term::let_in(x.clone(), Term::Val(v.clone()), t)
        })
}

fn describe(v: Option<&Value>) -> String {
    v.map_or_else(|| "nothing".to_string(), pretty_value)
}

/// Rules that look up their operands in the let-bound values in scope.
fn reduce_lookup(
    redex: &Term,
    lookup: &dyn Fn(&Var) -> Option<Value>,
    store: &mut Store,
) -> Result<(StepRule, Term, Option<(Loc, TypeExpr)>), StuckReason> {
    let location = |x: &Var, v: Option<Value>| match v {
        Some(Value::Loc(l)) => Ok(l),
        None => Err(StuckReason::UnboundVariable { var: x.clone() }),
        other => Err(StuckReason::ExpectedLocation {
            var: x.clone(),
            found: describe(other.as_ref()),
        }),
    };
    match redex {
        Term::App(x, y) => match lookup(x) {
            Some(Value::Lam(z, _, body)) => Ok((StepRule::Apply, (*body).subst(&z, y), None)),
            None => Err(StuckReason::UnboundVariable { var: x.clone() }),
            other => Err(StuckReason::ExpectedLambda {
                var: x.clone(),
                found: describe(other.as_ref()),
            }),
        },
        Term::FieldSel(x, a) => match lookup(x) {
            Some(Value::Obj(s, _, ds)) if ds.field_body(a).is_some() => {
                let body = ds.field_body(a).expect("checked").subst(&s, x);
                Ok((StepRule::Project, body, None))
            }
            None => Err(StuckReason::UnboundVariable { var: x.clone() }),
            other => Err(StuckReason::ExpectedField {
                var: x.clone(),
                label: a.clone(),
                found: describe(other.as_ref()),
            }),
        },
        Term::RefNew(x, t) => {
            let l = fresh_location(store);
            store.set(l, x.clone());
            Ok((
                StepRule::Ref,
                Term::Val(Value::Loc(l)),
                Some((l, t.clone())),
            ))
        }
        Term::Deref(x) => {
            let l = location(x, lookup(x))?;
            match store.get(l) {
                Some(y) => Ok((StepRule::Deref, Term::Var(y.clone()), None)),
                None => Err(StuckReason::UnboundLocation { loc: l }),
            }
        }
        Term::Asgn(x, y) => {
            let l = location(x, lookup(x))?;
            if !store.contains(l) {
                return Err(StuckReason::UnboundLocation { loc: l });
            }
            store.set(l, y.clone());
            Ok((StepRule::Store, Term::Var(y.clone()), None))
        }
        _ => unreachable!("not a lookup redex: {}", pretty_term(redex)),
    }
}

// ---- stack machine ----

pub fn step_stack(s: &MachineState) -> StepOutcome {
    if matches!(s.term, Term::Var(_) | Term::Val(_)) {
        return StepOutcome::Answer;
    }
    let mut stack = s.stack.clone();
    let mut store = s.store.clone();
    match stack_inner(&mut stack, &mut store, &s.term, &BTreeSet::new(), 0) {
        Ok((rule, depth, redex, alloc, term)) => StepOutcome::Stepped(Step {
            rule,
            depth,
            redex,
            alloc,
            state: MachineState { stack, store, term },
        }),
        Err(r) => StepOutcome::Stuck(r),
    }
}

type Reduced = (StepRule, usize, Term, Option<(Loc, TypeExpr)>, Term);

/// `avoid` holds names used by the continuations of enclosing lets; a value
/// pushed onto the stack must not shadow them.
fn stack_inner(
    stack: &mut Stack,
    store: &mut Store,
    t: &Term,
    avoid: &BTreeSet<Var>,
    depth: usize,
) -> Result<Reduced, StuckReason> {
    match t {
        Term::Let(x, bound, body) => match &**bound {
            Term::Val(v) => {
                let (x, body) = if stack.contains(x) || avoid.contains(x) {
                    let names = t.names();
                    let y = fresh_var(x, |y| {
                        stack.mentions(y) || avoid.contains(y) || names.contains(y)
                    });
                    let body = (**body).subst(x, &y);
                    (y, body)
                } else {
                    (x.clone(), (**body).clone())
                };
                stack.push(x, v.clone());
                Ok((StepRule::LetValue, depth, t.clone(), None, body))
            }
            Term::Var(y) => Ok((
                StepRule::LetVar,
                depth,
                t.clone(),
                None,
                (**body).subst(x, y),
            )),
            inner => {
                let mut avoid = avoid.clone();
                avoid.extend(body.names());
                avoid.insert(x.clone());
                let (rule, d, redex, alloc, inner2) =
                    stack_inner(stack, store, inner, &avoid, depth + 1)?;
                Ok((
                    rule,
                    d,
                    redex,
                    alloc,
                    Term::let_in(x.clone(), inner2, (**body).clone()),
                ))
            }
        },
        Term::Var(_) | Term::Val(_) => unreachable!("answers do not step"),
        redex => {
            let lookup = |x: &Var| stack.lookup(x).cloned();
            let (rule, reduct, alloc) = reduce_lookup(redex, &lookup, store)?;
            Ok((rule, depth, redex.clone(), alloc, reduct))
        }
    }
}

// ---- evaluation-context machine ----

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Frame {
    /// `let x = v in []`
    LetValue(Var, Value),
    /// `let x = [] in t`
    LetHole(Var, Term),
}

/// `e ::= [] | let x = [] in t | let x = v in e`, outermost frame first.
/// Only the last frame may be a `LetHole`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct EvalContext {
    pub frames: Vec<Frame>,
}

impl EvalContext {
    /// Splits a term into a context and the term in its hole. The focus is
    /// a redex, an answer leaf, or a let whose bound term is a variable or
    /// another let.
    pub fn decompose(t: &Term) -> (EvalContext, Term) {
        let mut frames = Vec::new();
        let mut cur = t.clone();
        loop {
            match cur {
                Term::Let(x, bound, body) => match *bound {
                    Term::Val(v) => {
                        frames.push(Frame::LetValue(x, v));
                        cur = *body;
                    }
                    Term::Var(_) | Term::Let(..) => {
                        cur = Term::Let(x, bound, body);
                        break;
                    }
                    redex => {
                        frames.push(Frame::LetHole(x, *body));
                        cur = redex;
                        break;
                    }
                },
                other => {
                    cur = other;
                    break;
                }
            }
        }
        (EvalContext { frames }, cur)
    }

    pub fn plug(&self, t: Term) -> Term {
        self.frames.iter().rev().fold(t, |inner, f| match f {
            Frame::LetValue(x, v) => Term::let_in(x.clone(), Term::Val(v.clone()), inner),
            Frame::LetHole(x, body) => Term::let_in(x.clone(), inner, body.clone()),
        })
    }

    /// Innermost enclosing `let x = v`.
    pub fn lookup(&self, x: &Var) -> Option<&Value> {
        self.frames.iter().rev().find_map(|f| match f {
            Frame::LetValue(y, v) if y == x => Some(v),
            _ => None,
        })
    }
}

/// Renames let-value binders along the spine so that no binder shadows an
/// enclosing one. The result is alpha-equivalent.
fn unique_spine(t: &Term) -> Term {
    let names = t.names();
    let mut seen: BTreeSet<Var> = BTreeSet::new();
    let mut used = names.clone();
    fn go(t: &Term, seen: &mut BTreeSet<Var>, used: &mut BTreeSet<Var>) -> Term {
        match t {
            Term::Let(x, bound, body) if matches!(**bound, Term::Val(_)) => {
                let (x, body) = if seen.contains(x) {
                    let y = fresh_var(x, |y| used.contains(y));
                    used.insert(y.clone());
                    (y.clone(), (**body).subst(x, &y))
                } else {
                    (x.clone(), (**body).clone())
                };
                seen.insert(x.clone());
                Term::let_in(x, (**bound).clone(), go(&body, seen, used))
            }
            other => other.clone(),
        }
    }
    go(t, &mut seen, &mut used)
}

pub fn step_context(s: &MachineState) -> StepOutcome {
    let term = unique_spine(&s.term);
    let (ctx, focus) = EvalContext::decompose(&term);
    let depth = ctx.frames.len();
    let mut store = s.store.clone();
    let (rule, reduct, alloc) = match &focus {
        Term::Var(_) | Term::Val(_) => return StepOutcome::Answer,
        Term::Let(x, bound, body) => match &**bound {
            Term::Var(y) => (StepRule::LetVar, (**body).subst(x, y), None),
            Term::Let(y, s1, t1) => {
                let (y2, t1) = if body.occurs_free(y) {
                    let taken = term.names();
                    let y2 = fresh_var(y, |v| taken.contains(v));
                    let t1 = (**t1).subst(y, &y2);
                    (y2, t1)
                } else {
                    (y.clone(), (**t1).clone())
                };
                let inner = Term::let_in(x.clone(), t1, (**body).clone());
                (
                    StepRule::LetLet,
                    Term::let_in(y2, (**s1).clone(), inner),
                    None,
                )
            }
            _ => unreachable!("decompose leaves only var or let bindings in focus"),
        },
        redex => {
            let lookup = |x: &Var| ctx.lookup(x).cloned();
            match reduce_lookup(redex, &lookup, &mut store) {
                Ok(r) => r,
                Err(e) => return StepOutcome::Stuck(e),
            }
        }
    };
    StepOutcome::Stepped(Step {
        rule,
        depth,
        redex: focus,
        alloc,
        state: MachineState {
            stack: Stack::new(),
            store,
            term: ctx.plug(reduct),
        },
    })
}

pub fn step(semantics: Semantics, s: &MachineState) -> StepOutcome {
    match semantics {
        Semantics::Stack => step_stack(s),
        Semantics::Context => step_context(s),
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunEnd {
    Answer,
    Stuck { reason: StuckReason },
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub semantics: Semantics,
    pub initial: MachineState,
    pub steps: Vec<Step>,
    pub end: RunEnd,
}

impl Trace {
    pub fn final_state(&self) -> &MachineState {
        self.steps.last().map_or(&self.initial, |s| &s.state)
    }

    /// States before and after each step, starting with the initial one.
    pub fn states(&self) -> impl Iterator<Item = &MachineState> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.state))
    }

    pub fn rules(&self) -> Vec<StepRule> {
        self.steps.iter().map(|s| s.rule).collect()
    }

    pub fn reached_answer(&self) -> bool {
        self.end == RunEnd::Answer
    }
}

/// Steps until an answer, a stuck state, or `max_steps` steps.
pub fn run(t: &Term, semantics: Semantics, max_steps: usize) -> Trace {
    run_from(MachineState::initial(t.clone()), semantics, max_steps)
}

pub fn run_from(initial: MachineState, semantics: Semantics, max_steps: usize) -> Trace {
    let mut steps: Vec<Step> = Vec::new();
    let end = loop {
        let cur = steps.last().map_or(&initial, |s| &s.state);
        match step(semantics, cur) {
            StepOutcome::Answer => break RunEnd::Answer,
            StepOutcome::Stuck(reason) => break RunEnd::Stuck { reason },
            StepOutcome::Stepped(s) => {
                if steps.len() == max_steps {
                    break RunEnd::BudgetExceeded;
                }
                steps.push(s);
            }
        }
    };
    Trace {
        semantics,
        initial,
        steps,
        end,
    }
}
