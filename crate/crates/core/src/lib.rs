//! Mutable DOT: a dependently typed object calculus with typed mutable
//! references.
//!
//! The crate is organised bottom-up: [`syntax`] and [`parser`] for terms,
//! [`typecheck`] for the certifying checker, [`eval`] for the two reduction
//! machines, and [`harness`] for checking soundness properties on traces.

pub mod eval;
pub mod harness;
pub mod parser;
pub mod syntax;
pub mod typecheck;
