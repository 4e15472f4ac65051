use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value as Json};

use mdot::eval::{run, MachineState, RunEnd, Semantics, Trace};
use mdot::harness::{fuzz, FuzzConfig};
use mdot::parser::{parse_program, pretty_term, pretty_type, pretty_value};
use mdot::syntax::Term;
use mdot::typecheck::{typecheck_program, Fuel, StoreTyping, TypeError};

const EXIT_TYPE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mdot",
    version,
    about = "Typecheck, run and fuzz mutable DOT programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the type of a program.
    Check {
        #[command(flatten)]
        input: Input,
        /// Print the typing derivation.
        #[arg(long)]
        derivation: bool,
    },
    /// Evaluate a program.
    Run(RunArgs),
    /// Evaluate a program, printing every step as a JSON line.
    Trace(RunArgs),
    /// Print a program with all abbreviations expanded.
    Desugar {
        /// Source file, or `-` for standard input.
        path: PathBuf,
    },
    /// Generate, run and check random well-typed programs.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = Fuel::DEFAULT.0)]
        fuel: usize,
        #[arg(long, default_value_t = 500)]
        max_steps: usize,
        #[arg(long, default_value_t = 40)]
        max_size: usize,
        /// Do not shrink failing programs.
        #[arg(long)]
        no_shrink: bool,
        /// Emit one JSON object per program, then the totals.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Input {
    /// Source file, or `-` for standard input.
    path: PathBuf,
    /// Rule applications allowed per subtyping query.
    #[arg(long, default_value_t = Fuel::DEFAULT.0)]
    fuel: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Stack,
    Context,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value = "stack")]
    semantics: SemanticsArg,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    /// Emit every step as a JSON line.
    #[arg(long)]
    trace: bool,
    /// Run even if the program does not typecheck.
    #[arg(long = "unsafe")]
    allow_ill_typed: bool,
}

fn read_source(path: &PathBuf) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("stdin: {e}"))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn load(path: &PathBuf) -> Result<Term, String> {
    let src = read_source(path)?;
    parse_program(&src).map_err(|e| format!("{}: {e}", path.display()))
}

fn type_error_code(e: &TypeError) -> u8 {
    match e {
        TypeError::OutOfFuel => EXIT_UNKNOWN,
        _ => EXIT_TYPE,
    }
}

fn cmd_check(input: &Input, derivation: bool) -> u8 {
    let t = match load(&input.path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_TYPE;
        }
    };
    match typecheck_program(&t, Fuel(input.fuel)) {
        Ok(r) => {
            if input.json {
                let mut out = json!({"verdict": "yes", "type": pretty_type(&r.ty)});
                if derivation {
                    out["derivation"] = serde_json::to_value(&r.derivation).expect("serializable");
                }
                println!("{out}");
            } else {
                println!("{}", pretty_type(&r.ty));
                if derivation {
                    print!("{}", r.derivation.to_text());
                }
            }
            0
        }
        Err(e) => {
            if input.json {
                let verdict = if matches!(e, TypeError::OutOfFuel) {
                    "unknown"
                } else {
                    "no"
                };
                println!("{}", json!({"verdict": verdict, "error": e.to_string()}));
            } else {
                eprintln!("{}: type error: {e}", input.path.display());
            }
            type_error_code(&e)
        }
    }
}

fn state_json(s: &MachineState, sigma: &StoreTyping) -> Map<String, Json> {
    let stack: Vec<Json> = s
        .stack
        .bindings()
        .iter()
        .map(|(x, v)| json!({"var": x.as_str(), "value": pretty_value(v)}))
        .collect();
    let store: Map<String, Json> = s
        .store
        .iter()
        .map(|(l, x)| (l.0.to_string(), Json::from(x.as_str())))
        .collect();
    let sig: Map<String, Json> = sigma
        .iter()
        .map(|(l, t)| (l.0.to_string(), Json::from(pretty_type(t))))
        .collect();
    let mut m = Map::new();
    m.insert("term".into(), Json::from(pretty_term(&s.term)));
    m.insert("stack".into(), Json::from(stack));
    m.insert("store".into(), Json::from(store));
    m.insert("sigma".into(), Json::from(sig));
    m
}

/// One JSON object per step; step 0 is the initial state.
fn trace_lines(tr: &Trace) -> Vec<String> {
    let mut sigma = StoreTyping::new();
    let mut lines = Vec::new();
    let mut first = state_json(&tr.initial, &sigma);
    first.insert("step".into(), json!(0));
    first.insert("rule".into(), Json::Null);
    lines.push(ordered(first));
    for (i, s) in tr.steps.iter().enumerate() {
        if let Some((l, t)) = &s.alloc {
            sigma.insert(*l, t.clone());
        }
        let mut m = state_json(&s.state, &sigma);
        m.insert("step".into(), json!(i + 1));
        m.insert("rule".into(), json!(s.rule.name()));
        lines.push(ordered(m));
    }
    lines
}

fn ordered(mut m: Map<String, Json>) -> String {
    let mut out = Map::new();
    for k in ["step", "rule", "term", "stack", "store", "sigma"] {
        if let Some(v) = m.remove(k) {
            out.insert(k.into(), v);
        }
    }
    Json::Object(out).to_string()
}

fn cmd_run(args: &RunArgs, trace: bool) -> u8 {
    let t = match load(&args.input.path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_TYPE;
        }
    };
    if !args.allow_ill_typed {
        if let Err(e) = typecheck_program(&t, Fuel(args.input.fuel)) {
            eprintln!(
                "{}: type error: {e} (use --unsafe to run anyway)",
                args.input.path.display()
            );
            return type_error_code(&e);
        }
    }
    let semantics = match args.semantics {
        SemanticsArg::Stack => Semantics::Stack,
        SemanticsArg::Context => Semantics::Context,
    };
    let tr = run(&t, semantics, args.max_steps);
    let last = tr.final_state();
    let mut stdout = io::stdout().lock();
    if trace {
        for line in trace_lines(&tr) {
            let _ = writeln!(stdout, "{line}");
        }
    }
    let (status, code) = match &tr.end {
        RunEnd::Answer => ("answer".to_string(), 0),
        RunEnd::Stuck { reason } => (format!("stuck: {reason}"), EXIT_RUNTIME),
        RunEnd::BudgetExceeded => (
            format!("no answer within {} steps", args.max_steps),
            EXIT_RUNTIME,
        ),
    };
    if args.input.json {
        let out = json!({
            "status": status,
            "answer": pretty_term(&last.term),
            "store": last.store.to_string(),
            "steps": tr.steps.len(),
        });
        let _ = writeln!(stdout, "{out}");
    } else if !trace {
        if code == 0 {
            let _ = writeln!(stdout, "answer: {}", pretty_term(&last.term));
        } else {
            let _ = writeln!(stdout, "{status}\nterm: {}", pretty_term(&last.term));
        }
        let _ = writeln!(stdout, "store: {}\nsteps: {}", last.store, tr.steps.len());
    } else if code != 0 {
        eprintln!("{status}");
    }
    code
}

fn cmd_desugar(path: &PathBuf) -> u8 {
    match load(path) {
        Ok(t) => {
            println!("{}", pretty_term(&t));
            0
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_TYPE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Check { input, derivation } => cmd_check(input, *derivation),
        Command::Run(args) => cmd_run(args, args.trace),
        Command::Trace(args) => cmd_run(args, true),
        Command::Desugar { path } => cmd_desugar(path),
        Command::Fuzz {
            seed,
            count,
            fuel,
            max_steps,
            max_size,
            no_shrink,
            json,
        } => {
            let report = fuzz(&FuzzConfig {
                seed: *seed,
                count: *count,
                max_size: *max_size,
                max_steps: *max_steps,
                fuel: Fuel(*fuel),
                shrink: !no_shrink,
            });
            if *json {
                print!("{}", report.to_json_lines());
            } else {
                print!("{}", report.human_summary());
            }
            if report.ok() {
                0
            } else {
                1
            }
        }
    };
    ExitCode::from(code)
}
