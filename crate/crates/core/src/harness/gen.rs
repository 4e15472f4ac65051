//! Random well-typed programs, built one let binding at a time. Every
//! binding is typed as it is generated, so later bindings can pick operands
//! by what their types expose.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::syntax::{Binding, Def, Label, Term, TypeExpr, Var};
use crate::typecheck::{
    check_var, expose, synthesize, typecheck_program, Fuel, StoreTyping, TypeEnv,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Upper bound on `Term::size` of the result.
    pub max_size: usize,
    pub refs: bool,
    pub objects: bool,
    pub fuel: Fuel,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            seed: 0,
            max_size: 40,
            refs: true,
            objects: true,
            fuel: Fuel::DEFAULT,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("no well-typed term found within size {max_size} after {attempts} attempts")]
    GenerationExhausted { max_size: usize, attempts: usize },
}

const ATTEMPTS: usize = 64;
/// `lambda(x: Top) x`
const SMALLEST: usize = 3;

/// A closed, location-free term and its synthesized type. The same config
/// always gives the same term.
pub fn generate_typed_term(cfg: &GenConfig) -> Result<(Term, TypeExpr), GenError> {
    let exhausted = GenError::GenerationExhausted {
        max_size: cfg.max_size,
        attempts: ATTEMPTS,
    };
    if cfg.max_size < SMALLEST {
        return Err(exhausted);
    }
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: *cfg,
        next: 0,
    };
    for _ in 0..ATTEMPTS {
        g.next = 0;
        let Some(t) = g.block(&TypeEnv::new(), cfg.max_size, 0) else {
            continue;
        };
        if t.size() > cfg.max_size {
            continue;
        }
        if let Ok(r) = typecheck_program(&t, cfg.fuel) {
            return Ok((t, r.ty));
        }
    }
    Err(exhausted)
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    next: usize,
}

#[derive(Clone, Copy)]
enum Kind {
    Lambda,
    Object,
    App,
    Select,
    Copy,
    Nested,
    Ref,
    Deref,
    Assign,
}

fn identity(x: Var) -> Term {
    Term::lambda(x.clone(), TypeExpr::Top, Term::Var(x))
}

impl Gen {
    fn fresh(&mut self, prefix: &str) -> Var {
        self.next += 1;
        Var::new(format!("{prefix}{}", self.next))
    }

    fn sigma() -> StoreTyping {
        StoreTyping::new()
    }

    fn members(&self, env: &TypeEnv, x: &Var) -> Vec<TypeExpr> {
        expose(env, &Self::sigma(), x, self.cfg.fuel)
            .map(|e| e.members.into_iter().map(|(t, _)| t).collect())
            .unwrap_or_default()
    }

    fn has_type(&self, env: &TypeEnv, x: &Var, t: &TypeExpr) -> bool {
        check_var(env, &Self::sigma(), x, t, self.cfg.fuel).is_yes()
    }

    /// `let x1 = e1 in ... in result`, with a result type that mentions no
    /// variable bound in the block.
    fn block(&mut self, env: &TypeEnv, budget: usize, depth: usize) -> Option<Term> {
        if budget < SMALLEST {
            return None;
        }
        let outer: BTreeSet<Var> = env.vars().into_iter().cloned().collect();
        let mut env = env.clone();
        let mut bindings: Vec<(Var, Term)> = Vec::new();
        let mut used = 0;
        let wanted = self.rng.gen_range(1..=(budget / 5).clamp(1, 6));
        for _ in 0..wanted {
            // One node per let, one for the final variable.
            let room = budget.saturating_sub(used + 2);
            if room < 1 {
                break;
            }
            for _ in 0..8 {
                let Some(e) = self.binding(&env, room, depth) else {
                    continue;
                };
                if e.size() > room {
                    continue;
                }
                let Ok(r) = synthesize(&env, &Self::sigma(), &e, self.cfg.fuel) else {
                    continue;
                };
                let x = self.fresh("x");
                env = env.extend(x.clone(), r.ty);
                used += e.size() + 1;
                bindings.push((x, e));
                break;
            }
        }
        let candidates: Vec<Var> = bindings
            .iter()
            .map(|(x, _)| x.clone())
            .filter(|x| {
                env.lookup(x)
                    .is_some_and(|t| t.free_vars().iter().all(|v| outer.contains(v)))
            })
            .collect();
        let result = if let Some(x) = candidates.choose(&mut self.rng) {
            Term::Var(x.clone())
        } else if bindings.is_empty() && budget >= SMALLEST {
            let z = self.fresh("z");
            return Some(identity(z));
        } else if used + 1 + SMALLEST <= budget {
            let z = self.fresh("z");
            identity(z)
        } else {
            return None;
        };
        Some(
            bindings
                .into_iter()
                .rev()
                .fold(result, |t, (x, e)| Term::let_in(x, e, t)),
        )
    }

    fn pick_kind(&mut self, env: &TypeEnv, depth: usize) -> Kind {
        let mut kinds: Vec<(Kind, u32)> = vec![(Kind::Lambda, if depth < 3 { 4 } else { 1 })];
        if !env.is_empty() {
            let app = if depth == 0 { 10 } else { 5 };
            kinds.extend([(Kind::App, app), (Kind::Copy, 1), (Kind::Nested, 2)]);
        }
        if self.cfg.objects {
            kinds.push((Kind::Object, 3));
            if !env.is_empty() {
                kinds.push((Kind::Select, 4));
            }
        }
        if self.cfg.refs && !env.is_empty() {
            kinds.extend([(Kind::Ref, 4), (Kind::Deref, 4), (Kind::Assign, 4)]);
        }
        let total: u32 = kinds.iter().map(|(_, w)| w).sum();
        let mut n = self.rng.gen_range(0..total);
        for (k, w) in &kinds {
            if n < *w {
                return *k;
            }
            n -= w;
        }
        unreachable!()
    }

    fn binding(&mut self, env: &TypeEnv, room: usize, depth: usize) -> Option<Term> {
        let vars: Vec<Var> = env.vars().into_iter().cloned().collect();
        match self.pick_kind(env, depth) {
            Kind::Lambda => {
                let s = self.type_for(env);
                let z = self.fresh("z");
                let inner = room.checked_sub(1 + s.size())?.min(room / 2 + 2);
                let body = self.block(&env.extend(z.clone(), s.clone()), inner, depth + 1)?;
                Some(Term::lambda(z, s, body))
            }
            Kind::Object => self.object(env, room, depth),
            Kind::App => {
                let mut calls = Vec::new();
                for f in &vars {
                    for m in self.members(env, f) {
                        if let TypeExpr::All(_, dom, _) = m {
                            for y in vars.iter().filter(|y| self.has_type(env, y, &dom)) {
                                calls.push(Term::App(f.clone(), y.clone()));
                            }
                        }
                    }
                }
                calls.choose(&mut self.rng).cloned()
            }
            Kind::Select => {
                let mut sels = Vec::new();
                for x in &vars {
                    for m in self.members(env, x) {
                        if let TypeExpr::FieldDecl(a, _) = m {
                            sels.push(Term::FieldSel(x.clone(), a));
                        }
                    }
                }
                sels.choose(&mut self.rng).cloned()
            }
            Kind::Copy => Some(Term::Var(vars.choose(&mut self.rng)?.clone())),
            Kind::Nested => {
                if depth >= 3 {
                    return None;
                }
                let t = self.block(env, room, depth + 1)?;
                matches!(t, Term::Let(..)).then_some(t)
            }
            Kind::Ref => {
                let y = vars.choose(&mut self.rng)?.clone();
                let t = if self.rng.gen_bool(0.5) {
                    TypeExpr::Top
                } else {
                    let mut options = vec![env.lookup(&y)?.clone()];
                    options.extend(
                        self.members(env, &y)
                            .into_iter()
                            .filter(|t| !matches!(t, TypeExpr::TypeDecl(..))),
                    );
                    options.choose(&mut self.rng)?.clone()
                };
                (t.size() < room).then(|| Term::RefNew(y, t))
            }
            Kind::Deref => {
                let refs = self.refs_in_scope(env, &vars);
                let (x, _) = refs.choose(&mut self.rng)?.clone();
                Some(Term::Deref(x))
            }
            Kind::Assign => {
                let refs = self.refs_in_scope(env, &vars);
                let (x, t) = refs.choose(&mut self.rng)?.clone();
                let ys: Vec<&Var> = vars.iter().filter(|y| self.has_type(env, y, &t)).collect();
                let y = (*ys.choose(&mut self.rng)?).clone();
                Some(Term::Asgn(x, y))
            }
        }
    }

    fn refs_in_scope(&self, env: &TypeEnv, vars: &[Var]) -> Vec<(Var, TypeExpr)> {
        let mut out = Vec::new();
        for x in vars {
            for m in self.members(env, x) {
                if let TypeExpr::RefT(t) = m {
                    out.push((x.clone(), *t));
                }
            }
        }
        out
    }

    /// A parameter or cell type closed under `env`.
    fn type_for(&mut self, env: &TypeEnv) -> TypeExpr {
        if self.rng.gen_bool(0.4) {
            return TypeExpr::Top;
        }
        let mut pool = vec![
            TypeExpr::Top,
            TypeExpr::field("a", TypeExpr::Top),
            TypeExpr::all("w", TypeExpr::Top, TypeExpr::Top),
        ];
        if self.cfg.refs {
            pool.push(TypeExpr::reference(TypeExpr::Top));
        }
        for x in env.vars() {
            if let Some(t) = env.lookup(x) {
                if t.size() <= 8 {
                    pool.push(t.clone());
                }
            }
            for m in self.members(env, x) {
                if let TypeExpr::TypeDecl(a, _, _) = m {
                    pool.push(TypeExpr::Sel(x.clone(), a));
                }
            }
        }
        pool.choose(&mut self.rng).expect("nonempty").clone()
    }

    /// `nu(s: T) d` whose declared type matches its definitions exactly.
    fn object(&mut self, env: &TypeEnv, room: usize, depth: usize) -> Option<Term> {
        let s = self.fresh("s");
        let vars: Vec<Var> = env.vars().into_iter().cloned().collect();
        let mut decls: Vec<(TypeExpr, Def)> = Vec::new();
        let mut size = 1;
        let count = self.rng.gen_range(1..=3);
        for i in 0..count {
            let field = Label::new(["a", "b", "c"][i]);
            let member = Label::new(["A", "B", "C"][i]);
            let choice = self.rng.gen_range(0..4);
            let (decl, def) = match choice {
                // {A = S} and, when possible, a field typed through s.A.
                0 => {
                    let ty = self.type_for(env);
                    size += ty.size() * 2 + 2;
                    decls.push((
                        TypeExpr::member(member.clone(), ty.clone(), ty.clone()),
                        Def::Type(member.clone(), ty.clone()),
                    ));
                    let holders: Vec<&Var> =
                        vars.iter().filter(|y| self.has_type(env, y, &ty)).collect();
                    let Some(y) = holders.choose(&mut self.rng) else {
                        continue;
                    };
                    let y = (*y).clone();
                    size += 3;
                    (
                        TypeExpr::field(field.clone(), TypeExpr::Sel(s.clone(), member)),
                        Def::field(field, Term::Var(y)),
                    )
                }
                // A field holding a variable in scope, at its own type.
                1 if !vars.is_empty() => {
                    let y = vars.choose(&mut self.rng)?.clone();
                    let t = env.lookup(&y)?.clone();
                    size += t.size() + 2;
                    (
                        TypeExpr::field(field.clone(), t),
                        Def::field(field, Term::Var(y)),
                    )
                }
                // A field referring back to the object.
                2 => {
                    size += 3;
                    (
                        TypeExpr::field(field.clone(), TypeExpr::Top),
                        Def::field(field, Term::Var(s.clone())),
                    )
                }
                // A method.
                _ => {
                    if depth >= 3 || room < size + 8 {
                        continue;
                    }
                    let p = self.type_for(env);
                    let z = self.fresh("z");
                    let inner = (room - size).min(12).saturating_sub(2 + p.size());
                    let inner_env = env.extend(z.clone(), p.clone());
                    let body = self.block(&inner_env, inner, depth + 1)?;
                    let lam = Term::lambda(z.clone(), p.clone(), body);
                    let ty = synthesize(env, &Self::sigma(), &lam, self.cfg.fuel)
                        .ok()?
                        .ty;
                    size += lam.size() + ty.size() + 2;
                    (TypeExpr::field(field.clone(), ty), Def::field(field, lam))
                }
            };
            decls.push((decl, def));
        }
        if decls.is_empty() || size > room {
            return None;
        }
        let mut it = decls.into_iter();
        let (t0, d0) = it.next()?;
        let (ty, defs) = it.fold((t0, d0), |(t, d), (t2, d2)| {
            (TypeExpr::and(t, t2), Def::and(d, d2))
        });
        Some(Term::object(s, ty, defs))
    }
}
