//! Runtime checks of the soundness judgments, a generator of well-typed
//! programs, and the fuzz loop that ties them together.

mod check;
mod diff;
mod fuzz;
mod gen;
mod shrink;

use std::fmt;

use serde::Serialize;

pub use check::{
    check_canonical_forms, check_progress, check_trace_preservation, Certificates, StepCheck,
    Summary, TraceReport,
};
pub use diff::{compare_traces, differential_run};
pub use fuzz::{
    check_program, fuzz, program_seed, FuzzConfig, FuzzRecord, FuzzReport, FuzzTotals, ProgramCheck,
};
pub use gen::{generate_typed_term, GenConfig, GenError};
pub use shrink::shrink;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail { reason: String },
    Unknown { reason: String },
}

impl Verdict {
    pub fn fail(reason: impl Into<String>) -> Verdict {
        Verdict::Fail {
            reason: reason.into(),
        }
    }

    pub fn unknown(reason: impl Into<String>) -> Verdict {
        Verdict::Unknown {
            reason: reason.into(),
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail { reason } => write!(f, "fail: {reason}"),
            Verdict::Unknown { reason } => write!(f, "unknown: {reason}"),
        }
    }
}
