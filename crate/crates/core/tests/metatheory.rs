//! Properties of the typechecker, checked over generated programs and the
//! machine states their runs pass through.

mod common;

use mdot::eval::{run, MachineState, Semantics};
use mdot::harness::{generate_typed_term, GenConfig};
use mdot::syntax::{Binding, Loc, Term, TypeExpr, Var};
use mdot::typecheck::{
    check_term, check_var, precise_type_value, subst_store_typing, subtype, synthesize,
    typecheck_program, validate_derivation, Decision, Derivation, Fuel, StoreTyping, TypeEnv,
    TypeError,
};

const FUEL: Fuel = Fuel::DEFAULT;

fn valid(d: &Derivation) -> bool {
    validate_derivation(d).is_valid()
}

fn programs(n: u64, max_size: usize) -> impl Iterator<Item = (u64, Term, TypeExpr)> {
    (0..n).map(move |seed| {
        let cfg = GenConfig {
            seed,
            max_size,
            ..GenConfig::default()
        };
        let (t, ty) = generate_typed_term(&cfg).unwrap();
        (seed, t, ty)
    })
}

/// A machine state with the context its stack and allocations give it.
struct Typed {
    env: TypeEnv,
    sigma: StoreTyping,
    state: MachineState,
}

fn typed_states(t: &Term) -> Vec<Typed> {
    let trace = run(t, Semantics::Stack, 500);
    let mut env = TypeEnv::new();
    let mut sigma = StoreTyping::new();
    let mut out = vec![Typed {
        env: env.clone(),
        sigma: sigma.clone(),
        state: trace.initial.clone(),
    }];
    let mut depth = 0;
    for s in &trace.steps {
        if let Some((l, ty)) = &s.alloc {
            sigma.insert(*l, ty.clone());
        }
        for (x, v) in &s.state.stack.bindings()[depth..] {
            let r = precise_type_value(&env, &sigma, v, FUEL).expect("stack values type");
            env = env.extend(x.clone(), r.ty);
        }
        depth = s.state.stack.len();
        out.push(Typed {
            env: env.clone(),
            sigma: sigma.clone(),
            state: s.state.clone(),
        });
    }
    out
}

fn equivalent(env: &TypeEnv, sigma: &StoreTyping, s: &TypeExpr, u: &TypeExpr) -> Decision<()> {
    match (
        subtype(env, sigma, s, u, FUEL),
        subtype(env, sigma, u, s, FUEL),
    ) {
        (Decision::Yes(a), Decision::Yes(b)) if valid(&a) && valid(&b) => Decision::Yes(()),
        (Decision::Unknown, _) | (_, Decision::Unknown) => Decision::Unknown,
        _ => Decision::No,
    }
}

#[test]
fn yes_decisions_are_certified() {
    for (seed, t, ty) in programs(200, 40) {
        let r = typecheck_program(&t, FUEL).unwrap();
        assert!(r.ty.alpha_eq(&ty));
        assert!(valid(&r.derivation), "seed {seed}");
        for s in typed_states(&t) {
            if let Ok(r) = synthesize(&s.env, &s.sigma, &s.state.term, FUEL) {
                assert!(valid(&r.derivation), "seed {seed}");
            }
        }
    }
}

#[test]
fn refl_top_bot() {
    let empty = (TypeEnv::new(), StoreTyping::new());
    for (seed, t, ty) in programs(200, 40) {
        for (env, sigma, s) in std::iter::once((empty.0.clone(), empty.1.clone(), ty)).chain(
            typed_states(&t).into_iter().flat_map(|s| {
                s.env
                    .bindings()
                    .into_iter()
                    .map(|(_, t)| t.clone())
                    .collect::<Vec<_>>()
                    .into_iter()
                    .map(move |t| (s.env.clone(), s.sigma.clone(), t))
            }),
        ) {
            for (lo, hi) in [(&s, &s), (&s, &TypeExpr::Top), (&TypeExpr::Bot, &s)] {
                match subtype(&env, &sigma, lo, hi, FUEL) {
                    Decision::Yes(d) => assert!(valid(&d), "seed {seed}"),
                    other => panic!("seed {seed}: {} for {lo:?} <: {hi:?}", other.verdict()),
                }
            }
        }
    }
}

#[test]
fn fuel_monotonicity() {
    for (seed, t, _) in programs(150, 40) {
        let mut last: Option<Result<TypeExpr, TypeError>> = None;
        for f in [8, 16, 32, 64, 128, 256, 1024] {
            let now = typecheck_program(&t, Fuel(f)).map(|r| r.ty);
            match (&last, &now) {
                (Some(Ok(a)), Ok(b)) => assert!(a.alpha_eq(b), "seed {seed} fuel {f}"),
                (Some(Ok(_)), Err(e)) => panic!("seed {seed}: yes became {e} at fuel {f}"),
                (Some(Err(e)), Ok(_)) if !matches!(e, TypeError::OutOfFuel) => {
                    panic!("seed {seed}: {e} became yes at fuel {f}")
                }
                _ => {}
            }
            last = Some(now);
        }
    }
}

#[test]
fn weakening() {
    let extra = [
        TypeExpr::Top,
        TypeExpr::Bot,
        TypeExpr::reference(TypeExpr::Top),
    ];
    for (seed, t, ty) in programs(200, 40) {
        for (i, e) in extra.iter().enumerate() {
            let fresh = Var::new(format!("unused{i}"));
            let env = TypeEnv::new().extend(fresh, e.clone());
            let sigma = StoreTyping::new().with(Loc(99), e.clone());
            let r =
                synthesize(&env, &sigma, &t, FUEL).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(r.ty.alpha_eq(&ty), "seed {seed}");
            assert!(valid(&r.derivation), "seed {seed}");
        }
    }
}

#[test]
fn ref_invariance() {
    for (seed, t, _) in programs(60, 30) {
        let states = typed_states(&t);
        let last = states.last().unwrap();
        let types: Vec<TypeExpr> = last
            .env
            .bindings()
            .into_iter()
            .map(|(_, t)| t.clone())
            .collect();
        for s in &types {
            for u in &types {
                let r = subtype(
                    &last.env,
                    &last.sigma,
                    &TypeExpr::reference(s.clone()),
                    &TypeExpr::reference(u.clone()),
                    FUEL,
                );
                if let Decision::Yes(d) = r {
                    assert!(valid(&d), "seed {seed}");
                    assert!(
                        subtype(&last.env, &last.sigma, s, u, FUEL).is_yes(),
                        "seed {seed}"
                    );
                    assert!(
                        subtype(&last.env, &last.sigma, u, s, FUEL).is_yes(),
                        "seed {seed}"
                    );
                }
            }
        }
    }
}

#[derive(Default, Debug)]
struct Counts {
    instances: usize,
    replaced_by_other: usize,
    unknown: usize,
}

/// With `x` the newest variable of a state and `y` any variable that has
/// x's type, replacing x by y in the state's term keeps its type, with the
/// store typing rewritten the same way.
#[test]
fn substitution_property() {
    let mut counts = Counts::default();
    for (seed, t, _) in programs(200, 25) {
        for s in typed_states(&t) {
            let Some((x, sx, prefix)) = s.env.split_last() else {
                continue;
            };
            let Ok(before) = synthesize(&s.env, &s.sigma, &s.state.term, FUEL) else {
                continue;
            };
            let fresh = Var::new("ysub");
            let mut candidates: Vec<(Var, TypeEnv)> =
                vec![(fresh.clone(), prefix.extend(fresh.clone(), sx.clone()))];
            for y in prefix.vars() {
                candidates.push((y.clone(), prefix.clone()));
            }
            for (y, env) in candidates {
                let sigma = subst_store_typing(&s.sigma, x, &y);
                match check_var(&env, &sigma, &y, &sx.subst(x, &y), FUEL) {
                    Decision::Yes(_) => {}
                    Decision::No => continue,
                    Decision::Unknown => {
                        counts.unknown += 1;
                        continue;
                    }
                }
                counts.instances += 1;
                if y != fresh {
                    counts.replaced_by_other += 1;
                }
                let term = s.state.term.subst(x, &y);
                let expected = before.ty.subst(x, &y);
                let ok = match synthesize(&env, &sigma, &term, FUEL) {
                    Ok(r) => {
                        assert!(valid(&r.derivation), "seed {seed}");
                        if y == fresh {
                            match equivalent(&env, &sigma, &r.ty, &expected) {
                                Decision::Yes(()) => true,
                                Decision::Unknown => {
                                    counts.unknown += 1;
                                    continue;
                                }
                                Decision::No => false,
                            }
                        } else {
                            subtype(&env, &sigma, &r.ty, &expected, FUEL).is_yes()
                        }
                    }
                    Err(TypeError::OutOfFuel) => {
                        counts.unknown += 1;
                        continue;
                    }
                    Err(_) => false,
                };
                let ok =
                    ok || check_term(&env, &sigma, &term, &expected, FUEL).is_ok_and(|d| valid(&d));
                assert!(
                    ok,
                    "seed {seed}: [{y}/{x}] {}",
                    mdot::parser::pretty_term(&s.state.term)
                );
            }
        }
    }
    assert!(counts.instances > 1000, "{counts:?}");
    assert!(counts.replaced_by_other > 100, "{counts:?}");
    assert!(counts.unknown * 100 < counts.instances, "{counts:?}");
}
