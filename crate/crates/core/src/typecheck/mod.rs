//! Certifying typechecker.
//!
//! Every positive answer carries a [`Derivation`] over the declarative rules,
//! which [`validate_derivation`] re-checks without trusting the search.

mod derivation;
mod env;
mod runtime;
mod search;
mod synth;
mod validate;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{Def, Label, Loc, Term, TypeExpr, Value, Var};

pub use derivation::{Derivation, Judgment, Rule};
pub use env::{subst_store_typing, StoreTyping, TypeEnv};
pub use runtime::{stack_corresponds, well_typed_store};
pub use validate::{validate_derivation, Problem, Validation};

use search::Search;
use synth::Synth;

/// Outcome of a search that may run out of fuel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision<T> {
    Yes(T),
    No,
    /// Fuel ran out before the search finished.
    Unknown,
}

impl<T> Decision<T> {
    pub fn is_yes(&self) -> bool {
        matches!(self, Decision::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Decision::No)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Decision::Unknown)
    }

    pub fn yes(self) -> Option<T> {
        match self {
            Decision::Yes(t) => Some(t),
            _ => None,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Decision<U> {
        match self {
            Decision::Yes(t) => Decision::Yes(f(t)),
            Decision::No => Decision::No,
            Decision::Unknown => Decision::Unknown,
        }
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            Decision::Yes(_) => "yes",
            Decision::No => "no",
            Decision::Unknown => "unknown",
        }
    }
}

/// Rule applications allowed per query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Fuel(pub usize);

impl Fuel {
    pub const DEFAULT: Fuel = Fuel(256);
}

impl Default for Fuel {
    fn default() -> Fuel {
        Fuel::DEFAULT
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Var),
    #[error("location {} is not in the store typing", .0.0)]
    UnknownLocation(Loc),
    #[error("in `{term}`: `{var}` escapes in the type `{ty}`")]
    Escape { term: String, var: Var, ty: String },
    #[error("`{var}` is not a function: its type is `{ty}`")]
    NotAFunction { var: Var, ty: String },
    #[error("`{var}` has no field `{label}`")]
    NoField { var: Var, label: Label },
    #[error("`{var}` is not a reference: its type is `{ty}`")]
    NotARef { var: Var, ty: String },
    #[error("`{term}` does not have type `{expected}`")]
    Mismatch { term: String, expected: String },
    #[error("label `{0}` is defined twice")]
    DuplicateLabel(Label),
    #[error("definitions `{defs}` do not have the declared type `{expected}`")]
    DefShape { defs: String, expected: String },
    #[error("store location {} is not in the store typing", .0.0)]
    DanglingLocation(Loc),
    #[error("stack binds `{found}` where the context binds `{expected}`")]
    DomainMismatch { expected: String, found: String },
    #[error("fuel exhausted before the search finished")]
    OutOfFuel,
}

/// A synthesized type together with its derivation.
#[derive(Clone, Debug)]
pub struct Typed {
    pub ty: TypeExpr,
    pub derivation: Derivation,
}

/// Types reachable for a variable by opening, splitting and climbing bounds.
#[derive(Clone, Debug, Default)]
pub struct Exposures {
    /// Declaration-shaped types, each with a derivation for the variable.
    pub members: Vec<(TypeExpr, Derivation)>,
    /// Set when the variable can be typed `Bot`.
    pub bottom: bool,
}

impl Exposures {
    pub fn types(&self) -> Vec<&TypeExpr> {
        self.members.iter().map(|(t, _)| t).collect()
    }
}

pub fn subtype(
    env: &TypeEnv,
    sigma: &StoreTyping,
    s: &TypeExpr,
    u: &TypeExpr,
    fuel: Fuel,
) -> Decision<Derivation> {
    Search::new(sigma, fuel).subtype_query(env, s, u)
}

pub fn check_var(
    env: &TypeEnv,
    sigma: &StoreTyping,
    x: &Var,
    t: &TypeExpr,
    fuel: Fuel,
) -> Decision<Derivation> {
    if !env.contains(x) {
        return Decision::No;
    }
    Search::new(sigma, fuel).check_var_query(env, x, t)
}

pub fn expose(
    env: &TypeEnv,
    sigma: &StoreTyping,
    x: &Var,
    fuel: Fuel,
) -> Result<Exposures, TypeError> {
    if !env.contains(x) {
        return Err(TypeError::UnboundVariable(x.clone()));
    }
    let mut search = Search::new(sigma, fuel);
    match search.expose(env, x) {
        Decision::Yes(e) => {
            let members = e
                .items
                .iter()
                .filter(|i| {
                    !matches!(
                        i.ty,
                        TypeExpr::Rec(..) | TypeExpr::And(..) | TypeExpr::Sel(..) | TypeExpr::Bot
                    )
                })
                .map(|i| (i.ty.clone(), i.deriv.clone()))
                .collect();
            Ok(Exposures {
                members,
                bottom: e.bottom.is_some(),
            })
        }
        Decision::No => Err(TypeError::UnboundVariable(x.clone())),
        Decision::Unknown => Err(TypeError::OutOfFuel),
    }
}

/// Most specific type of `t`.
pub fn synthesize(
    env: &TypeEnv,
    sigma: &StoreTyping,
    t: &Term,
    fuel: Fuel,
) -> Result<Typed, TypeError> {
    Synth::new(sigma, fuel).synth(env, t)
}

/// Derivation of `t : ty`, pushing the expected type into lets, variables
/// and lambdas before falling back to synthesis and subsumption.
pub fn check_term(
    env: &TypeEnv,
    sigma: &StoreTyping,
    t: &Term,
    ty: &TypeExpr,
    fuel: Fuel,
) -> Result<Derivation, TypeError> {
    Synth::new(sigma, fuel).check(env, t, ty)
}

pub fn typecheck_defs(
    env: &TypeEnv,
    sigma: &StoreTyping,
    d: &Def,
    fuel: Fuel,
) -> Result<Typed, TypeError> {
    Synth::new(sigma, fuel).synth_defs(env, d)
}

/// Type of a value by a derivation whose root is `{}-I`, `All-I` or `Loc`.
pub fn precise_type_value(
    env: &TypeEnv,
    sigma: &StoreTyping,
    v: &Value,
    fuel: Fuel,
) -> Result<Typed, TypeError> {
    synthesize(env, sigma, &Term::Val(v.clone()), fuel)
}

/// Typechecks a closed program.
pub fn typecheck_program(t: &Term, fuel: Fuel) -> Result<Typed, TypeError> {
    synthesize(&TypeEnv::new(), &StoreTyping::new(), t, fuel)
}
