//! Small-step evaluation: a stack machine and an evaluation-context machine.

mod machine;
mod state;

pub use machine::{
    is_answer, reify_stack, run, run_from, step, step_context, step_stack, EvalContext, Frame,
    MachineState, RunEnd, Semantics, Step, StepOutcome, StepRule, StuckReason, Trace,
};
pub use state::{fresh_location, Stack, Store};
