//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use mdot::eval::{run, RunEnd, Semantics, StepRule};
use mdot::harness::{
    check_trace_preservation, differential_run, fuzz, generate_typed_term, FuzzConfig, GenConfig,
};
use mdot::parser::{parse, parse_program, parse_type, pretty_surface, pretty_term, pretty_type};
use mdot::syntax::desugar::desugar;
use mdot::syntax::{Binding, Loc, Term, TypeExpr, Var};
use mdot::typecheck::{
    subtype, typecheck_program, validate_derivation, Decision, Derivation, Fuel, Judgment, Rule,
    StoreTyping, TypeEnv,
};
use oracle::Oracle;

const FUEL: Fuel = Fuel::DEFAULT;

const CORPUS: [&str; 7] = [
    "id_ref.mdot",
    "fig6.mdot",
    "ref_annotation.mdot",
    "bad_ref_sub.mdot",
    "bad_bounds.mdot",
    "aquarium.mdot",
    "mutable_aquarium.mdot",
];

type Outcome = Result<String, String>;

fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn program(name: &str) -> Term {
    parse_program(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ty(src: &str, scope: &[&str]) -> TypeExpr {
    let scope: Vec<Var> = scope.iter().map(Var::new).collect();
    parse_type(src, &scope).unwrap_or_else(|e| panic!("{src}: {e}"))
}

fn mdot(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mdot"))
        .args(args)
        .output()
        .expect("mdot runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn valid(d: &Derivation) -> bool {
    validate_derivation(d).is_valid()
}

/// A single location holding `x`.
fn one_cell(store: &mdot::eval::Store, x: &str) -> bool {
    let cells: Vec<_> = store.iter().collect();
    cells.len() == 1 && cells[0].1.as_str() == x
}

fn id_ref() -> Outcome {
    let start = Instant::now();
    let t = program("id_ref.mdot");
    let r = typecheck_program(&t, FUEL).map_err(|e| e.to_string())?;
    ensure(r.ty.alpha_eq(&ty("all(x: Top) Top", &[])), || {
        format!("type {}", pretty_type(&r.ty))
    })?;
    ensure(valid(&r.derivation), || "derivation rejected".into())?;
    let tr = run(&t, Semantics::Stack, 10_000);
    let last = tr.final_state();
    ensure(tr.end == RunEnd::Answer, || format!("{:?}", tr.end))?;
    ensure(last.term == Term::var("id'"), || {
        format!("answer {}", pretty_term(&last.term))
    })?;
    ensure(one_cell(&last.store, "id'"), || {
        format!("store {}", last.store)
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    let (code, out) = mdot(&["run", corpus_path("id_ref.mdot").to_str().unwrap()]);
    ensure(
        code == 0 && out.starts_with("answer: id'\nstore: {0 -> id'}\n"),
        || format!("cli: {out}"),
    )?;
    Ok(format!(
        "all(x: Top) Top, answer id', store {}, {elapsed:.2?}",
        last.store
    ))
}

fn fig6() -> Outcome {
    let start = Instant::now();
    let t = program("fig6.mdot");
    typecheck_program(&t, FUEL).map_err(|e| e.to_string())?;
    let tr = run(&t, Semantics::Stack, 10_000);
    let last = tr.final_state();
    ensure(
        tr.end == RunEnd::Answer && last.term == Term::var("y"),
        || format!("answer {}", pretty_term(&last.term)),
    )?;
    ensure(one_cell(&last.store, "y"), || {
        format!("store {}", last.store)
    })?;
    let expected = [
        StepRule::LetValue,
        StepRule::LetValue,
        StepRule::Apply,
        StepRule::Ref,
        StepRule::LetValue,
        StepRule::Deref,
    ];
    let rules = tr.rules();
    ensure(rules == expected, || format!("rules {rules:?}"))?;
    ensure(run(&t, Semantics::Stack, 10_000).rules() == rules, || {
        "rules differ between runs".into()
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    let golden =
        std::fs::read_to_string(corpus_path("fig6.trace.jsonl")).map_err(|e| e.to_string())?;
    let path = corpus_path("fig6.mdot");
    for attempt in 0..2 {
        let (code, out) = mdot(&["trace", path.to_str().unwrap()]);
        ensure(code == 0 && out == golden, || {
            format!("trace run {attempt} differs from the golden trace")
        })?;
    }
    let golden_rules: Vec<String> = golden
        .lines()
        .skip(1)
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["rule"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let names: Vec<String> = rules.iter().map(|r| r.name().to_string()).collect();
    ensure(golden_rules == names, || {
        format!("golden rules {golden_rules:?}")
    })?;
    Ok(format!(
        "answer y, store {}, rules {}",
        last.store,
        names.join(", ")
    ))
}

fn bad_bounds() -> Outcome {
    let env = TypeEnv::new().extend(Var::new("y"), ty("{A: Top..Bot}", &[]));
    let d = match subtype(
        &env,
        &StoreTyping::new(),
        &TypeExpr::Top,
        &TypeExpr::Bot,
        FUEL,
    ) {
        Decision::Yes(d) => d,
        other => return Err(format!("decision {}", other.verdict())),
    };
    ensure(d.rule == Rule::Trans && d.premises.len() == 2, || {
        format!("root {}", d.rule)
    })?;
    let through = |j: &Judgment, upper: bool| match j {
        Judgment::Sub {
            lower, upper: u, ..
        } => {
            let mid = if upper { u } else { lower };
            *mid == TypeExpr::sel("y", "A")
        }
        _ => false,
    };
    ensure(
        through(&d.premises[0].conclusion, true) && through(&d.premises[1].conclusion, false),
        || "Trans does not pass through y.A".into(),
    )?;
    let rules: Vec<Rule> = d.nodes().iter().map(|n| n.rule).collect();
    ensure(
        rules.contains(&Rule::SubSel) && rules.contains(&Rule::SelSub),
        || format!("rules {rules:?}"),
    )?;
    let v = validate_derivation(&d);
    ensure(v.is_valid(), || format!("validator: {v:?}"))?;
    Ok(format!("Top <: y.A <: Bot, {} nodes, validated", d.size()))
}

fn ref_invariance() -> Outcome {
    let (env, sigma) = (TypeEnv::new(), StoreTyping::new());
    let l = ty("Ref ({a: Top} /\\ {b: Top})", &[]);
    let swapped = ty("Ref ({b: Top} /\\ {a: Top})", &[]);
    let narrow = ty("Ref {a: Top}", &[]);
    match subtype(&env, &sigma, &l, &swapped, FUEL) {
        Decision::Yes(d) => ensure(valid(&d), || "swapped derivation rejected".into())?,
        other => return Err(format!("swapped: {}", other.verdict())),
    }
    let no = subtype(&env, &sigma, &l, &narrow, FUEL);
    ensure(no.is_no(), || format!("narrowed: {}", no.verdict()))?;
    let mut oracle = Oracle::new(&[], &[&l, &narrow]);
    ensure(!oracle.subtype(&l, &narrow, 6), || {
        "oracle finds a derivation".into()
    })?;
    ensure(oracle.subtype(&l, &l, 6), || {
        "oracle cannot derive reflexivity".into()
    })?;
    Ok(format!(
        "swapped yes, narrowed no, confirmed by depth-6 search over {} types",
        oracle.universe_size()
    ))
}

fn ref_annotation() -> Outcome {
    let t = program("ref_annotation.mdot");
    let t0 = typecheck_program(&t, FUEL).map_err(|e| e.to_string())?.ty;
    let tr = run(&t, Semantics::Stack, 10_000);
    ensure(tr.end == RunEnd::Answer, || format!("{:?}", tr.end))?;
    let report = check_trace_preservation(&tr, &t0, FUEL);
    let all_pass = report
        .steps
        .iter()
        .all(|s| s.verdicts().iter().all(|(_, v)| v.is_pass()));
    ensure(all_pass, || {
        format!("first failure {:?}", report.first_failure())
    })?;
    let declared = ty("{a: Top}", &[]);
    let sigma: Vec<(Loc, &TypeExpr)> = report.final_sigma.iter().collect();
    ensure(sigma == vec![(Loc(0), &declared)], || {
        format!("final sigma {}", report.final_sigma)
    })?;
    Ok(format!(
        "{} states all pass, final sigma {}",
        report.steps.len(),
        report.final_sigma
    ))
}

struct FuzzRun {
    report: mdot::harness::FuzzReport,
    elapsed: Duration,
}

fn fuzz_run() -> FuzzRun {
    let start = Instant::now();
    let report = fuzz(&FuzzConfig {
        seed: 2024,
        count: 1000,
        ..FuzzConfig::default()
    });
    FuzzRun {
        report,
        elapsed: start.elapsed(),
    }
}

fn fuzz_soundness(f: &FuzzRun) -> Outcome {
    let t = &f.report.totals;
    ensure(t.programs >= 1000, || format!("{} programs", t.programs))?;
    for (name, s) in [
        ("progress", &t.progress),
        ("preservation", &t.preservation),
        ("store", &t.store),
        ("stack", &t.stack),
        ("scoping", &t.scoping),
        ("canonical", &t.canonical),
    ] {
        ensure(s.fail == 0, || format!("{} {name} failures", s.fail))?;
    }
    ensure(t.unknown_rate < 0.01, || {
        format!("unknown rate {:.4}", t.unknown_rate)
    })?;
    ensure(f.elapsed < Duration::from_secs(300), || {
        format!("took {:?}", f.elapsed)
    })?;
    let max = f.report.records.iter().map(|r| r.size).max().unwrap_or(0);
    ensure(max <= 40, || format!("program of size {max}"))?;
    Ok(format!(
        "{} programs, {} steps, {} checks, 0 failures, unknown {:.2}%, {:.1?}",
        t.programs,
        t.steps,
        t.checks.total(),
        t.unknown_rate * 100.0,
        f.elapsed
    ))
}

fn certificates(f: &FuzzRun) -> Outcome {
    let mut accepted = 0;
    for name in CORPUS {
        let t = program(name);
        let Ok(r) = typecheck_program(&t, FUEL) else {
            ensure(name == "bad_ref_sub.mdot", || {
                format!("{name} does not typecheck")
            })?;
            continue;
        };
        ensure(valid(&r.derivation), || {
            format!("{name}: program derivation rejected")
        })?;
        accepted += 1;
        let tr = run(&t, Semantics::Stack, 10_000);
        let report = check_trace_preservation(&tr, &r.ty, FUEL);
        ensure(report.certificates.rejected == 0, || {
            format!("{name}: {} rejected", report.certificates.rejected)
        })?;
        accepted += report.certificates.accepted;
    }
    let c = f.report.totals.certificates;
    ensure(c.rejected == 0, || format!("fuzz: {} rejected", c.rejected))?;
    ensure(c.accepted > 0, || "fuzz produced no derivations".into())?;
    Ok(format!(
        "{accepted} corpus and {} fuzz derivations, all accepted",
        c.accepted
    ))
}

fn differential(f: &FuzzRun) -> Outcome {
    for name in CORPUS {
        let v = differential_run(&program(name), 10_000);
        ensure(v.is_pass(), || format!("{name}: {v}"))?;
    }
    let d = f.report.totals.differential;
    ensure(d.pass >= 200 && d.fail == 0 && d.unknown == 0, || {
        format!("fuzz: {d:?}")
    })?;
    let ctx = mdot(&[
        "run",
        "--semantics",
        "context",
        corpus_path("fig6.mdot").to_str().unwrap(),
    ]);
    // The context machine keeps the value bindings in the answer term.
    let answer = ctx.1.lines().next().unwrap_or("");
    ensure(
        ctx.0 == 0 && answer.starts_with("answer: ") && answer.ends_with(" in y"),
        || format!("cli context run: {}", ctx.1),
    )?;
    Ok(format!(
        "{} corpus and {} fuzzed programs agree",
        CORPUS.len(),
        d.pass
    ))
}

fn round_trip() -> Outcome {
    for name in CORPUS {
        let s = parse(&source(name)).map_err(|e| format!("{name}: {e}"))?;
        let t = desugar(&s);
        for printed in [pretty_term(&t), pretty_surface(&s)] {
            let back = parse_program(&printed).map_err(|e| format!("{name}: {e}"))?;
            ensure(back.alpha_eq(&t), || format!("{name}: {printed}"))?;
        }
    }
    for seed in 0..500 {
        let (t, _) = generate_typed_term(&GenConfig {
            seed,
            ..GenConfig::default()
        })
        .map_err(|e| format!("seed {seed}: {e}"))?;
        let printed = pretty_term(&t);
        let back = parse_program(&printed).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(back.alpha_eq(&t), || format!("seed {seed}: {printed}"))?;
    }
    Ok(format!(
        "{} corpus files and 500 generated terms",
        CORPUS.len()
    ))
}

fn has_ref_field(t: &TypeExpr, label: &str) -> bool {
    match t {
        TypeExpr::FieldDecl(a, u) => a.as_str() == label && matches!(**u, TypeExpr::RefT(_)),
        TypeExpr::And(l, r) => has_ref_field(l, label) || has_ref_field(r, label),
        _ => false,
    }
}

fn aquariums() -> Outcome {
    let mut types = Vec::new();
    for name in ["aquarium.mdot", "mutable_aquarium.mdot"] {
        let (code, out) = mdot(&["check", corpus_path(name).to_str().unwrap()]);
        ensure(code == 0, || format!("{name}: exit {code}"))?;
        types.push(out.trim().to_string());
    }
    let r =
        typecheck_program(&program("mutable_aquarium.mdot"), FUEL).map_err(|e| e.to_string())?;
    ensure(valid(&r.derivation), || "derivation rejected".into())?;
    let fish = r
        .derivation
        .nodes()
        .into_iter()
        .find_map(|n| match &n.conclusion {
            Judgment::Defs { ty, .. } | Judgment::Typed { ty, .. } if has_ref_field(ty, "fish") => {
                Some(ty.clone())
            }
            _ => None,
        });
    let fish = fish.ok_or("no judgment gives `fish` a Ref type")?;
    let decl = match &fish {
        TypeExpr::FieldDecl(..) => pretty_type(&fish),
        _ => "{fish: Ref ...}".to_string(),
    };
    Ok(format!(
        "both typecheck ({}), fish: {decl}",
        types.join(", ")
    ))
}

fn main() {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, o: Outcome| {
        let line = match o {
            Ok(detail) => format!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                format!("criterion {n:>2} FAIL  {name}: {why}")
            }
        };
        println!("{line}");
    };
    let guard = |f: &dyn Fn() -> Outcome| match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    report(1, "id_ref", guard(&id_ref));
    report(2, "fig6 trace", guard(&fig6));
    report(3, "bad bounds", guard(&bad_bounds));
    report(4, "ref invariance", guard(&ref_invariance));
    report(5, "ref annotation", guard(&ref_annotation));
    let fz = catch_unwind(fuzz_run);
    match &fz {
        Ok(f) => {
            report(6, "fuzz soundness", guard(&|| fuzz_soundness(f)));
            report(7, "certificates", guard(&|| certificates(f)));
            report(8, "differential", guard(&|| differential(f)));
        }
        Err(_) => {
            for (n, name) in [
                (6, "fuzz soundness"),
                (7, "certificates"),
                (8, "differential"),
            ] {
                report(n, name, Err("fuzz run panicked".into()));
            }
        }
    }
    report(9, "round trip", guard(&round_trip));
    report(10, "aquariums", guard(&aquariums));
    println!(
        "{} of 10 criteria pass ({:.1?})",
        10 - failed,
        started.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
