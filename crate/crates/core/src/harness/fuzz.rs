//! Generate, run and check, many times over.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::check::{
    check_canonical_forms, check_progress, check_trace_preservation, Certificates, Summary,
};
use super::diff::differential_run;
use super::gen::{generate_typed_term, GenConfig};
use super::shrink::shrink;
use super::Verdict;
use crate::eval::{run, RunEnd, Semantics};
use crate::parser::{pretty_term, pretty_type};
use crate::syntax::{Term, TypeExpr};
use crate::typecheck::{typecheck_program, Fuel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub count: usize,
    pub max_size: usize,
    pub max_steps: usize,
    pub fuel: Fuel,
    pub shrink: bool,
}

impl Default for FuzzConfig {
    fn default() -> FuzzConfig {
        FuzzConfig {
            seed: 0,
            count: 100,
            max_size: 40,
            max_steps: 500,
            fuel: Fuel::DEFAULT,
            shrink: true,
        }
    }
}

/// Every check run on one program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProgramCheck {
    pub steps: usize,
    pub end: String,
    pub preservation: Summary,
    pub store: Summary,
    pub stack: Summary,
    pub scoping: Summary,
    pub progress: Summary,
    pub canonical: Verdict,
    pub differential: Verdict,
    pub certificates: Certificates,
    pub failures: Vec<String>,
}

impl ProgramCheck {
    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for part in [
            self.preservation,
            self.store,
            self.stack,
            self.scoping,
            self.progress,
        ] {
            s.merge(part);
        }
        s.add(&self.canonical);
        s.add(&self.differential);
        s
    }

    pub fn failed(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Runs `t` on the stack machine and checks every judgment along the way.
pub fn check_program(t: &Term, ty: &TypeExpr, max_steps: usize, fuel: Fuel) -> ProgramCheck {
    let mut certificates = Certificates::default();
    if let Ok(r) = typecheck_program(t, fuel) {
        certificates.record(&r.derivation);
    }
    let trace = run(t, Semantics::Stack, max_steps);
    let report = check_trace_preservation(&trace, ty, fuel);
    certificates.merge(report.certificates);
    let mut failures = Vec::new();
    let mut sums = [Summary::default(); 4];
    for s in &report.steps {
        for (i, (name, v)) in s.verdicts().into_iter().enumerate() {
            sums[i].add(v);
            if v.is_fail() {
                failures.push(format!("{name} at state {}: {v}", s.index));
            }
        }
    }
    let mut progress = Summary::default();
    for (i, s) in trace.states().enumerate() {
        let v = check_progress(s, Semantics::Stack);
        if v.is_fail() {
            failures.push(format!("progress at state {i}: {v}"));
        }
        progress.add(&v);
    }
    let canonical = check_canonical_forms(&trace, fuel);
    if canonical.is_fail() {
        failures.push(format!("canonical forms: {canonical}"));
    }
    let differential = differential_run(t, max_steps);
    if differential.is_fail() {
        failures.push(format!("differential: {differential}"));
    }
    let end = match &trace.end {
        RunEnd::Answer => "answer".to_string(),
        RunEnd::Stuck { reason } => format!("stuck: {reason}"),
        RunEnd::BudgetExceeded => "budget exceeded".to_string(),
    };
    ProgramCheck {
        steps: trace.steps.len(),
        end,
        preservation: sums[0],
        store: sums[1],
        stack: sums[2],
        scoping: sums[3],
        progress,
        canonical,
        differential,
        certificates,
        failures,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzRecord {
    pub index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ty: Option<String>,
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<ProgramCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generation_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shrunk: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FuzzTotals {
    pub programs: usize,
    pub generation_failures: usize,
    pub steps: usize,
    pub preservation: Summary,
    pub store: Summary,
    pub stack: Summary,
    pub scoping: Summary,
    pub progress: Summary,
    pub canonical: Summary,
    pub differential: Summary,
    pub checks: Summary,
    pub certificates: Certificates,
    pub failed_programs: usize,
    pub unknown_rate: f64,
}

impl FuzzTotals {
    fn add(&mut self, r: &FuzzRecord) {
        let Some(c) = &r.check else {
            self.generation_failures += 1;
            return;
        };
        self.programs += 1;
        self.steps += c.steps;
        self.preservation.merge(c.preservation);
        self.store.merge(c.store);
        self.stack.merge(c.stack);
        self.scoping.merge(c.scoping);
        self.progress.merge(c.progress);
        self.canonical.add(&c.canonical);
        self.differential.add(&c.differential);
        self.checks.merge(c.summary());
        self.certificates.merge(c.certificates);
        if c.failed() {
            self.failed_programs += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzReport {
    pub records: Vec<FuzzRecord>,
    pub totals: FuzzTotals,
}

impl FuzzReport {
    pub fn ok(&self) -> bool {
        self.totals.checks.fail == 0 && self.totals.certificates.rejected == 0
    }

    /// One JSON object per program, then one for the totals.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("serializable"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.totals).expect("serializable"));
        out.push('\n');
        out
    }

    pub fn human_summary(&self) -> String {
        let t = &self.totals;
        let line = |name: &str, s: &Summary| {
            format!(
                "  {name:<14} {:>7} pass {:>4} fail {:>4} unknown\n",
                s.pass, s.fail, s.unknown
            )
        };
        let mut out = format!(
            "{} programs ({} not generated), {} steps\n",
            t.programs, t.generation_failures, t.steps
        );
        out += &line("progress", &t.progress);
        out += &line("preservation", &t.preservation);
        out += &line("store", &t.store);
        out += &line("stack", &t.stack);
        out += &line("scoping", &t.scoping);
        out += &line("canonical", &t.canonical);
        out += &line("differential", &t.differential);
        out += &format!(
            "  derivations    {:>7} accepted {:>4} rejected\n  unknown rate   {:.4}%\n",
            t.certificates.accepted,
            t.certificates.rejected,
            t.unknown_rate * 100.0
        );
        for r in &self.records {
            if let Some(c) = r.check.as_ref().filter(|c| c.failed()) {
                out += &format!(
                    "FAIL #{} (seed {}): {}\n",
                    r.index,
                    r.seed,
                    c.failures.join("; ")
                );
                if let Some(s) = &r.shrunk {
                    out += &format!("  shrunk: {s}\n");
                }
            }
        }
        out
    }
}

/// Seed of the `index`-th program of a run.
pub fn program_seed(base: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index as u64);
    rng.next_u64()
}

fn fuzz_one(cfg: &FuzzConfig, index: usize) -> FuzzRecord {
    let seed = program_seed(cfg.seed, index);
    let gen = GenConfig {
        seed,
        max_size: cfg.max_size,
        fuel: cfg.fuel,
        ..GenConfig::default()
    };
    let (t, ty) = match generate_typed_term(&gen) {
        Ok(x) => x,
        Err(e) => {
            return FuzzRecord {
                index,
                seed,
                program: None,
                ty: None,
                size: 0,
                check: None,
                generation_error: Some(e.to_string()),
                shrunk: None,
            }
        }
    };
    let check = check_program(&t, &ty, cfg.max_steps, cfg.fuel);
    let shrunk = (cfg.shrink && check.failed()).then(|| {
        let fails = |c: &Term| match typecheck_program(c, cfg.fuel) {
            Ok(r) => check_program(c, &r.ty, cfg.max_steps, cfg.fuel).failed(),
            Err(_) => false,
        };
        pretty_term(&shrink(&t, cfg.fuel, &fails))
    });
    FuzzRecord {
        index,
        seed,
        program: Some(pretty_term(&t)),
        ty: Some(pretty_type(&ty)),
        size: t.size(),
        check: Some(check),
        generation_error: None,
        shrunk,
    }
}

/// Runs `cfg.count` generate-run-check cycles in parallel. Records come
/// back in index order, so the report depends only on the config.
pub fn fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let records: Vec<FuzzRecord> = (0..cfg.count)
        .into_par_iter()
        .map(|i| fuzz_one(cfg, i))
        .collect();
    let mut totals = FuzzTotals::default();
    for r in &records {
        totals.add(r);
    }
    let checks = totals.checks.total();
    totals.unknown_rate = if checks == 0 {
        0.0
    } else {
        totals.checks.unknown as f64 / checks as f64
    };
    FuzzReport { records, totals }
}
