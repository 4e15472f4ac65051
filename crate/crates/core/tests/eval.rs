mod common;

use common::{corpus, program, var};
use mdot::eval::{
    fresh_location, is_answer, reify_stack, run, step_context, step_stack, EvalContext,
    MachineState, RunEnd, Semantics, Stack, StepOutcome, StepRule, Store, StuckReason,
};
use mdot::syntax::{Binding, Loc, Term, TypeExpr, Value, Var};

fn id_lam(x: &str) -> Value {
    Value::Lam(var(x), TypeExpr::Top, Box::new(Term::var(x)))
}

fn stepped(o: StepOutcome) -> mdot::eval::Step {
    match o {
        StepOutcome::Stepped(s) => s,
        other => panic!("{other:?}"),
    }
}

fn store(items: &[(usize, &str)]) -> Store {
    items.iter().map(|(l, x)| (Loc(*l), var(x))).collect()
}

/// Smallest natural not in the set, by counting up.
fn smallest_gap(used: &[usize]) -> usize {
    (0..).find(|n| !used.contains(n)).unwrap()
}

#[test]
fn answers() {
    assert!(is_answer(&program("lambda(y: Top) y")));
    assert!(is_answer(&program("let x = lambda(y: Top) y in x")));
    let t = Term::let_in("x", Term::var("y"), Term::var("x"));
    assert!(!is_answer(&t));
    assert!(!is_answer(&program("let f = lambda(y: Top) y in f f")));
    assert!(is_answer(&Term::var("x")));
}

#[test]
fn fresh_locations() {
    assert_eq!(fresh_location(&Store::new()), Loc(0));
    assert_eq!(fresh_location(&store(&[(0, "x"), (1, "y")])), Loc(2));
    for used in [vec![0, 2], vec![1], vec![0, 1, 2, 4, 5], vec![3, 0]] {
        let s: Store = used.iter().map(|l| (Loc(*l), var("x"))).collect();
        assert_eq!(fresh_location(&s), Loc(smallest_gap(&used)), "{used:?}");
    }
}

#[test]
fn reify() {
    let s = MachineState::initial(Term::var("t"));
    assert_eq!(reify_stack(&s), Term::var("t"));
    let mut stack = Stack::new();
    stack.push(var("f"), id_lam("x"));
    let s = MachineState {
        stack,
        store: Store::new(),
        term: Term::App(var("f"), var("y")),
    };
    let expected = Term::let_in("f", Term::Val(id_lam("x")), Term::App(var("f"), var("y")));
    assert_eq!(reify_stack(&s), expected);
}

#[test]
fn stack_rules() {
    let v = id_lam("z");
    let s = MachineState::initial(Term::let_in("x", Term::Val(v.clone()), Term::var("x")));
    let st = stepped(step_stack(&s));
    assert_eq!(st.rule, StepRule::LetValue);
    assert_eq!(st.state.stack.bindings(), &[(var("x"), v.clone())]);
    assert_eq!(st.state.term, Term::var("x"));
    assert_eq!(step_stack(&st.state), StepOutcome::Answer);

    // Ref allocates the smallest free location.
    let mut stack = Stack::new();
    stack.push(var("x"), v.clone());
    let s = MachineState {
        stack: stack.clone(),
        store: store(&[(0, "x")]),
        term: Term::RefNew(var("x"), TypeExpr::Top),
    };
    let st = stepped(step_stack(&s));
    assert_eq!(st.rule, StepRule::Ref);
    assert_eq!(st.state.term, Term::Val(Value::Loc(Loc(1))));
    assert_eq!(st.state.store, store(&[(0, "x"), (1, "x")]));
    assert_eq!(st.alloc, Some((Loc(1), TypeExpr::Top)));

    // Deref and Store.
    stack.push(var("y"), v.clone());
    stack.push(var("r"), Value::Loc(Loc(0)));
    let s = MachineState {
        stack: stack.clone(),
        store: store(&[(0, "x")]),
        term: Term::Deref(var("r")),
    };
    let st = stepped(step_stack(&s));
    assert_eq!(
        (st.rule, st.state.term.clone()),
        (StepRule::Deref, Term::var("x"))
    );
    assert_eq!(st.state.store, s.store);
    let s = MachineState {
        term: Term::Asgn(var("r"), var("y")),
        ..s
    };
    let st = stepped(step_stack(&s));
    assert_eq!(
        (st.rule, st.state.term.clone()),
        (StepRule::Store, Term::var("y"))
    );
    assert_eq!(st.state.store, store(&[(0, "y")]));
}

#[test]
fn stuck_reasons() {
    let mut stack = Stack::new();
    stack.push(var("l"), Value::Loc(Loc(0)));
    stack.push(var("f"), id_lam("x"));
    let st = |term: Term, store: Store| MachineState {
        stack: stack.clone(),
        store,
        term,
    };
    let cases = [
        (Term::App(var("l"), var("f")), Store::new()),
        (Term::FieldSel(var("f"), "a".into()), Store::new()),
        (Term::Deref(var("f")), Store::new()),
        (Term::Deref(var("l")), Store::new()),
        (Term::App(var("g"), var("f")), Store::new()),
    ];
    let reasons: Vec<StuckReason> = cases
        .into_iter()
        .map(|(t, s)| match step_stack(&st(t, s)) {
            StepOutcome::Stuck(r) => r,
            other => panic!("{other:?}"),
        })
        .collect();
    assert!(matches!(reasons[0], StuckReason::ExpectedLambda { .. }));
    assert!(matches!(reasons[1], StuckReason::ExpectedField { .. }));
    assert!(matches!(reasons[2], StuckReason::ExpectedLocation { .. }));
    assert_eq!(reasons[3], StuckReason::UnboundLocation { loc: Loc(0) });
    assert_eq!(reasons[4], StuckReason::UnboundVariable { var: var("g") });
}

#[test]
fn fig6_stack_run() {
    let t = program(&corpus("fig6.mdot"));
    let tr = run(&t, Semantics::Stack, 100);
    assert_eq!(tr.end, RunEnd::Answer);
    use StepRule::*;
    assert_eq!(
        tr.rules(),
        vec![LetValue, LetValue, Apply, Ref, LetValue, Deref]
    );
    let depths: Vec<usize> = tr.steps.iter().map(|s| s.depth).collect();
    assert_eq!(depths, vec![0, 0, 1, 1, 0, 0]);
    let last = tr.final_state();
    assert_eq!(last.term, Term::var("y"));
    assert_eq!(last.store, store(&[(0, "y")]));
    let names: Vec<&Var> = last.stack.bindings().iter().map(|(x, _)| x).collect();
    assert_eq!(names, vec![&var("f"), &var("y"), &var("r")]);
    assert!(is_answer(&reify_stack(last)));
    // The states after the Apply and Ref steps, as laid out in the worked example.
    assert_eq!(
        tr.steps[2].state.term,
        Term::let_in(
            "r",
            Term::RefNew(var("y"), TypeExpr::Top),
            Term::Deref(var("r"))
        )
    );
    assert_eq!(
        tr.steps[3].state.term,
        Term::let_in("r", Term::Val(Value::Loc(Loc(0))), Term::Deref(var("r")))
    );
    assert_eq!(run(&t, Semantics::Stack, 100), tr);
}

#[test]
fn id_ref_stack_run() {
    let t = program(&corpus("id_ref.mdot"));
    let tr = run(&t, Semantics::Stack, 100);
    assert_eq!(tr.end, RunEnd::Answer);
    let last = tr.final_state();
    assert_eq!(last.term, Term::var("id'"));
    assert_eq!(last.store, store(&[(0, "id'")]));
}

#[test]
fn bare_value_is_immediate() {
    for sem in [Semantics::Stack, Semantics::Context] {
        let tr = run(&program("lambda(x: Top) x"), sem, 10);
        assert!(tr.steps.is_empty());
        assert_eq!(tr.end, RunEnd::Answer);
    }
}

#[test]
fn budget() {
    let t = program(&corpus("fig6.mdot"));
    let tr = run(&t, Semantics::Stack, 3);
    assert_eq!(tr.end, RunEnd::BudgetExceeded);
    assert_eq!(tr.steps.len(), 3);
    // Self-application loops forever.
    let omega = program("let w = lambda(x: Top) let f = x in f f in w w");
    let tr = run(&omega, Semantics::Stack, 50);
    assert_eq!(tr.end, RunEnd::BudgetExceeded);
}

#[test]
fn context_rules() {
    // Let-Let re-associates.
    let s = program("let x = (let y = lambda(a: Top) a in y) in x");
    let st = stepped(step_context(&MachineState::initial(s)));
    assert_eq!(st.rule, StepRule::LetLet);
    let expected = program("let y = lambda(a: Top) a in let x = y in x");
    assert_eq!(st.state.term, expected);

    // Apply finds the enclosing binding.
    let s = program("let f = lambda(z: Top) z in let y = lambda(a: Top) a in f y");
    let mut st = MachineState::initial(s);
    let mut rules = Vec::new();
    while let StepOutcome::Stepped(x) = step_context(&st) {
        rules.push(x.rule);
        st = x.state;
    }
    assert_eq!(rules, vec![StepRule::Apply]);
    assert_eq!(
        st.term,
        program("let f = lambda(z: Top) z in let y = lambda(a: Top) a in y")
    );

    // Ref at the top.
    let mut bare = MachineState::initial(Term::RefNew(var("x"), TypeExpr::Top));
    bare.store = store(&[(0, "q")]);
    let st = stepped(step_context(&bare));
    assert_eq!(st.state.term, Term::Val(Value::Loc(Loc(1))));
    assert_eq!(st.state.store, store(&[(0, "q"), (1, "x")]));
}

#[test]
fn let_let_avoids_capture() {
    // y is free in the continuation, so the hoisted binder is renamed.
    let t = Term::let_in(
        "x",
        Term::let_in("y", Term::Val(id_lam("a")), Term::var("y")),
        Term::App(var("x"), var("y")),
    );
    let outer = Term::let_in("y", Term::Val(id_lam("b")), t);
    let st = stepped(step_context(&MachineState::initial(outer.clone())));
    assert_eq!(st.rule, StepRule::LetLet);
    // The continuation still applies x to the outer y.
    let Term::Let(_, _, inner) = &st.state.term else {
        panic!()
    };
    let Term::Let(y2, _, rest) = &**inner else {
        panic!()
    };
    assert_ne!(y2, &var("y"));
    let Term::Let(_, bound, cont) = &**rest else {
        panic!()
    };
    assert_eq!(**bound, Term::Var(y2.clone()));
    assert_eq!(**cont, Term::App(var("x"), var("y")));
}

#[test]
fn shadowing_is_lexical_on_both_machines() {
    // The inner w must not capture the w that f closes over.
    let src = "let w = lambda(a: Top) a in
               let f = lambda(z: Top) w in
               let w = lambda(b: Top) let c = b in c in
               let k = lambda(q: Top) q in
               f k";
    let t = program(src);
    for sem in [Semantics::Stack, Semantics::Context] {
        let tr = run(&t, sem, 100);
        assert_eq!(tr.end, RunEnd::Answer, "{sem}");
        let answer = reify_stack(tr.final_state());
        // Strip the let spine and resolve the result variable.
        let mut spine = Vec::new();
        let mut cur = &answer;
        while let Term::Let(x, b, u) = cur {
            spine.push((x.clone(), (**b).clone()));
            cur = u;
        }
        let Term::Var(res) = cur else {
            panic!("{sem}: {answer:?}")
        };
        let bound = &spine.iter().rev().find(|(x, _)| x == res).unwrap().1;
        assert!(bound.alpha_eq(&Term::Val(id_lam("a"))), "{sem}: {bound:?}");
    }
}

#[test]
fn decompose_plug_inverse() {
    let srcs = [
        "let f = lambda(z: Top) z in let y = f f in y",
        "let x = (let y = lambda(a: Top) a in y) in x",
        "let a = lambda(z: Top) z in let b = ref a Top in !b",
        "lambda(x: Top) x",
    ];
    for src in srcs {
        let t = program(src);
        let (ctx, focus) = EvalContext::decompose(&t);
        assert_eq!(ctx.plug(focus), t, "{src}");
    }
}

#[test]
fn context_machine_on_corpus() {
    let t = program(&corpus("fig6.mdot"));
    let tr = run(&t, Semantics::Context, 100);
    assert_eq!(tr.end, RunEnd::Answer);
    let last = tr.final_state();
    assert!(is_answer(&last.term));
    assert_eq!(last.store, store(&[(0, "y")]));
    assert!(last.stack.is_empty());
    use StepRule::*;
    assert_eq!(tr.rules(), vec![Apply, Ref, Deref]);

    let t = program(&corpus("id_ref.mdot"));
    let tr = run(&t, Semantics::Context, 100);
    assert_eq!(tr.end, RunEnd::Answer);
    assert_eq!(tr.final_state().store, store(&[(0, "id'")]));
}

#[test]
fn stack_invariants_along_runs() {
    for name in ["fig6.mdot", "id_ref.mdot", "ref_annotation.mdot"] {
        let t = program(&corpus(name));
        let tr = run(&t, Semantics::Stack, 200);
        let states: Vec<&MachineState> = tr.states().collect();
        for w in states.windows(2) {
            assert!(w[0].stack.is_prefix_of(&w[1].stack), "{name}");
            let changed = w[1]
                .store
                .iter()
                .filter(|(l, x)| w[0].store.get(*l) != Some(*x))
                .count();
            assert!(changed <= 1, "{name}");
            assert!(w[0].store.iter().all(|(l, _)| w[1].store.contains(l)));
            for (_, x) in w[1].store.iter() {
                assert!(w[1].stack.contains(x), "{name}: {x} not on the stack");
            }
        }
    }
}
