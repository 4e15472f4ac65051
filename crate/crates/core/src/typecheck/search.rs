//! Goal-directed proof search for subtyping and variable typing.
//!
//! Transitivity, subsumption and the recursive-type rules are not syntax
//! directed, so the search fixes an order of strategies, memoises finished
//! goals and cuts goals that are already being attempted higher up. Each
//! query runs against a fuel budget; running out yields `Unknown`.
//!
//! Queries run in two passes. The first pass never pivots through arbitrary
//! type selections in the context; only if it fails outright does the second
//! pass enable the pivot.

use std::collections::HashMap;
use std::rc::Rc;

use super::derivation::{Derivation, Judgment, Rule};
use super::env::{StoreTyping, TypeEnv};
use super::{Decision, Fuel};
use crate::syntax::{fresh_var, Binding, Label, Term, TypeExpr, Var};

/// A type reachable for a variable, with the derivation that reaches it.
#[derive(Clone, Debug)]
pub(crate) struct Exposed {
    pub ty: TypeExpr,
    pub deriv: Derivation,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Exposure {
    /// Every reachable type, starting with the context entry itself.
    pub items: Vec<Exposed>,
    /// A derivation of `x : Bot`, if one was reached.
    pub bottom: Option<Derivation>,
}

impl Exposure {
    pub fn type_members<'a>(
        &'a self,
        a: &'a Label,
    ) -> impl Iterator<Item = (&'a TypeExpr, &'a TypeExpr, &'a Derivation)> {
        self.items.iter().filter_map(move |e| match &e.ty {
            TypeExpr::TypeDecl(b, lo, hi) if b == a => Some((&**lo, &**hi, &e.deriv)),
            _ => None,
        })
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Goal {
    Sub(TypeEnv, TypeExpr, TypeExpr, bool),
    Var(TypeEnv, Var, TypeExpr, bool),
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Decision::Yes(d) => Some(d),
            Decision::No => None,
            Decision::Unknown => return Decision::Unknown,
        }
    };
}

macro_rules! require {
    ($e:expr) => {
        match $e {
            Decision::Yes(d) => d,
            Decision::No => return Decision::No,
            Decision::Unknown => return Decision::Unknown,
        }
    };
}

pub(crate) struct Search<'s> {
    sigma: &'s StoreTyping,
    budget: usize,
    fuel: usize,
    exhausted: bool,
    pivot: bool,
    in_pivot: bool,
    memo: HashMap<Goal, Option<Derivation>>,
    exposures: HashMap<(TypeEnv, Var), Rc<Exposure>>,
    in_progress: HashMap<Goal, usize>,
    exposing: Vec<(TypeEnv, Var)>,
    depth: usize,
    /// Shallowest in-progress goal that was cut since the last reset.
    cut_low: usize,
}

impl<'s> Search<'s> {
    pub fn new(sigma: &'s StoreTyping, fuel: Fuel) -> Search<'s> {
        Search {
            sigma,
            budget: fuel.0,
            fuel: fuel.0,
            exhausted: false,
            pivot: false,
            in_pivot: false,
            memo: HashMap::new(),
            exposures: HashMap::new(),
            in_progress: HashMap::new(),
            exposing: Vec::new(),
            depth: 0,
            cut_low: usize::MAX,
        }
    }

    /// Restores the full budget for the next top-level query. Memo tables
    /// are kept: they only ever hold results reached without exhaustion.
    pub fn refuel(&mut self) {
        self.fuel = self.budget;
        self.exhausted = false;
    }

    pub fn sigma(&self) -> &'s StoreTyping {
        self.sigma
    }

    fn tick(&mut self) -> bool {
        if self.fuel == 0 {
            self.exhausted = true;
            return false;
        }
        self.fuel -= 1;
        true
    }

    fn finish<T>(&self, found: Option<T>) -> Decision<T> {
        match found {
            Some(t) => Decision::Yes(t),
            None if self.exhausted => Decision::Unknown,
            None => Decision::No,
        }
    }

    /// Runs `f` without, then with, the pivot strategy.
    fn two_pass<T>(&mut self, mut f: impl FnMut(&mut Self) -> Decision<T>) -> Decision<T> {
        self.pivot = false;
        match f(self) {
            Decision::No => {
                self.pivot = true;
                let r = f(self);
                self.pivot = false;
                r
            }
            other => other,
        }
    }

    pub fn subtype_query(
        &mut self,
        env: &TypeEnv,
        s: &TypeExpr,
        u: &TypeExpr,
    ) -> Decision<Derivation> {
        self.two_pass(|me| me.sub(env, s, u))
    }

    pub fn check_var_query(
        &mut self,
        env: &TypeEnv,
        x: &Var,
        t: &TypeExpr,
    ) -> Decision<Derivation> {
        self.two_pass(|me| me.check_var(env, x, t))
    }

    // ---- judgment builders ----

    pub fn typed(&self, env: &TypeEnv, term: Term, ty: TypeExpr) -> Judgment {
        Judgment::Typed {
            env: env.clone(),
            sigma: self.sigma.clone(),
            term,
            ty,
        }
    }

    fn subj(&self, env: &TypeEnv, lower: TypeExpr, upper: TypeExpr) -> Judgment {
        Judgment::Sub {
            env: env.clone(),
            sigma: self.sigma.clone(),
            lower,
            upper,
        }
    }

    fn axiom(&self, env: &TypeEnv, rule: Rule, lower: &TypeExpr, upper: &TypeExpr) -> Derivation {
        Derivation::new(rule, self.subj(env, lower.clone(), upper.clone()), vec![])
    }

    /// Chains two subtyping derivations, dropping reflexive links.
    pub fn trans(&self, d1: Derivation, d2: Derivation) -> Derivation {
        if d1.rule == Rule::Refl {
            return d2;
        }
        if d2.rule == Rule::Refl {
            return d1;
        }
        let (Judgment::Sub { env, lower, .. }, Judgment::Sub { upper, .. }) =
            (&d1.conclusion, &d2.conclusion)
        else {
            unreachable!("trans over non-subtyping derivations")
        };
        let j = self.subj(env, lower.clone(), upper.clone());
        Derivation::new(Rule::Trans, j, vec![d1, d2])
    }

    /// Subsumption, skipped when the subtyping step is reflexive.
    pub fn subsume(&self, typing: Derivation, subd: Derivation) -> Derivation {
        if subd.rule == Rule::Refl {
            return typing;
        }
        let (Judgment::Typed { env, term, .. }, Judgment::Sub { upper, .. }) =
            (&typing.conclusion, &subd.conclusion)
        else {
            unreachable!("subsume over mismatched derivations")
        };
        let j = self.typed(env, term.clone(), upper.clone());
        Derivation::new(Rule::Sub, j, vec![typing, subd])
    }

    /// From `x : Bot`, any type for `x`.
    fn from_bottom(&self, env: &TypeEnv, bot: &Derivation, target: &TypeExpr) -> Derivation {
        let b = self.axiom(env, Rule::Bot, &TypeExpr::Bot, target);
        self.subsume(bot.clone(), b)
    }

    // ---- memo and cycle bookkeeping ----

    fn with_goal(
        &mut self,
        goal: Goal,
        body: impl FnOnce(&mut Self) -> Decision<Derivation>,
    ) -> Decision<Derivation> {
        if let Some(r) = self.memo.get(&goal) {
            return match r {
                Some(d) => Decision::Yes(d.clone()),
                None => Decision::No,
            };
        }
        if let Some(&at) = self.in_progress.get(&goal) {
            self.cut_low = self.cut_low.min(at);
            return Decision::No;
        }
        let my_depth = self.depth;
        self.depth += 1;
        self.in_progress.insert(goal.clone(), my_depth);
        let outer_cut = std::mem::replace(&mut self.cut_low, usize::MAX);
        let r = body(self);
        self.in_progress.remove(&goal);
        self.depth -= 1;
        let inner_cut = self.cut_low;
        // A No that relied on cutting an ancestor is only valid on this path.
        let provisional = inner_cut < my_depth;
        match &r {
            Decision::Yes(d) => {
                self.memo.insert(goal, Some(d.clone()));
            }
            Decision::No if !provisional => {
                self.memo.insert(goal, None);
            }
            _ => {}
        }
        self.cut_low = outer_cut.min(if provisional { inner_cut } else { usize::MAX });
        r
    }

    // ---- exposure ----

    pub fn expose(&mut self, env: &TypeEnv, x: &Var) -> Decision<Rc<Exposure>> {
        let key = (env.clone(), x.clone());
        if let Some(e) = self.exposures.get(&key) {
            return Decision::Yes(e.clone());
        }
        if self.exhausted {
            return Decision::Unknown;
        }
        let Some(start) = env.lookup(x) else {
            return Decision::No;
        };
        if self.exposing.contains(&key) {
            self.cut_low = 0;
            return Decision::Yes(Rc::new(Exposure::default()));
        }
        self.exposing.push(key.clone());
        let outer_cut = std::mem::replace(&mut self.cut_low, usize::MAX);
        let r = self.expose_inner(env, x, start.clone());
        self.exposing.pop();
        let cut = self.cut_low;
        self.cut_low = outer_cut.min(cut);
        match r {
            Some(e) => {
                let e = Rc::new(e);
                if cut == usize::MAX {
                    self.exposures.insert(key, e.clone());
                }
                Decision::Yes(e)
            }
            None => Decision::Unknown,
        }
    }

    fn expose_inner(&mut self, env: &TypeEnv, x: &Var, start: TypeExpr) -> Option<Exposure> {
        let var = Derivation::new(
            Rule::Var,
            self.typed(env, Term::Var(x.clone()), start.clone()),
            vec![],
        );
        let mut out = Exposure::default();
        let mut queue = std::collections::VecDeque::new();
        let mut deferred: Vec<usize> = Vec::new();
        if !self.push_exposed(&mut out, &mut queue, start, var) {
            return None;
        }
        loop {
            while let Some(i) = queue.pop_front() {
                let Exposed { ty, deriv } = out.items[i].clone();
                match &ty {
                    TypeExpr::Rec(z, body) => {
                        let opened = (**body).subst(z, x);
                        let d = Derivation::new(
                            Rule::RecE,
                            self.typed(env, Term::Var(x.clone()), opened.clone()),
                            vec![deriv],
                        );
                        if !self.push_exposed(&mut out, &mut queue, opened, d) {
                            return None;
                        }
                    }
                    TypeExpr::And(a, b) => {
                        for (part, rule) in [(a, Rule::And1), (b, Rule::And2)] {
                            let s = self.axiom(env, rule, &ty, part);
                            let d = self.subsume(deriv.clone(), s);
                            if !self.push_exposed(&mut out, &mut queue, (**part).clone(), d) {
                                return None;
                            }
                        }
                    }
                    TypeExpr::Sel(y, a) if y == x => deferred.push(i),
                    TypeExpr::Sel(y, a) => {
                        let ey = match self.expose(env, y) {
                            Decision::Yes(e) => e,
                            Decision::No => continue,
                            Decision::Unknown => return None,
                        };
                        let steps = self.climb(env, &ey, y, a);
                        for (hi, sd) in steps {
                            let d = self.subsume(deriv.clone(), sd);
                            if !self.push_exposed(&mut out, &mut queue, hi, d) {
                                return None;
                            }
                        }
                    }
                    TypeExpr::Bot => {
                        if out.bottom.is_none() {
                            out.bottom = Some(deriv.clone());
                        }
                    }
                    _ => {}
                }
            }
            // Selections on x itself use what has been exposed so far.
            let before = out.items.len();
            for &i in &deferred {
                let Exposed { ty, deriv } = out.items[i].clone();
                let TypeExpr::Sel(_, a) = &ty else { continue };
                let snapshot = out.clone();
                for (hi, sd) in self.climb(env, &snapshot, x, a) {
                    let d = self.subsume(deriv.clone(), sd);
                    if !self.push_exposed(&mut out, &mut queue, hi, d) {
                        return None;
                    }
                }
            }
            if out.items.len() == before {
                return Some(out);
            }
        }
    }

    /// `y.A <: hi` steps through the declarations of `A` exposed for `y`.
    fn climb(
        &self,
        env: &TypeEnv,
        ey: &Exposure,
        y: &Var,
        a: &Label,
    ) -> Vec<(TypeExpr, Derivation)> {
        let sel = TypeExpr::Sel(y.clone(), a.clone());
        let mut out = Vec::new();
        if let Some(bot) = &ey.bottom {
            let decl = TypeExpr::member(a.clone(), TypeExpr::Bot, TypeExpr::Bot);
            let dy = self.from_bottom(env, bot, &decl);
            let j = self.subj(env, sel.clone(), TypeExpr::Bot);
            out.push((TypeExpr::Bot, Derivation::new(Rule::SelSub, j, vec![dy])));
        }
        for (_, hi, dy) in ey.type_members(a) {
            let j = self.subj(env, sel.clone(), hi.clone());
            out.push((
                hi.clone(),
                Derivation::new(Rule::SelSub, j, vec![dy.clone()]),
            ));
        }
        out
    }

    fn push_exposed(
        &mut self,
        out: &mut Exposure,
        queue: &mut std::collections::VecDeque<usize>,
        ty: TypeExpr,
        deriv: Derivation,
    ) -> bool {
        if out.items.iter().any(|e| e.ty.alpha_eq(&ty)) {
            return true;
        }
        if !self.tick() {
            return false;
        }
        queue.push_back(out.items.len());
        out.items.push(Exposed { ty, deriv });
        true
    }

    // ---- subtyping ----

    pub fn sub(&mut self, env: &TypeEnv, s: &TypeExpr, u: &TypeExpr) -> Decision<Derivation> {
        if !self.tick() {
            return Decision::Unknown;
        }
        if s.alpha_eq(u) {
            return Decision::Yes(self.axiom(env, Rule::Refl, s, u));
        }
        if *u == TypeExpr::Top {
            return Decision::Yes(self.axiom(env, Rule::Top, s, u));
        }
        if *s == TypeExpr::Bot {
            return Decision::Yes(self.axiom(env, Rule::Bot, s, u));
        }
        let goal = Goal::Sub(
            env.clone(),
            s.clone(),
            u.clone(),
            self.pivot && !self.in_pivot,
        );
        self.with_goal(goal, |me| me.sub_rules(env, s, u))
    }

    fn sub_rules(&mut self, env: &TypeEnv, s: &TypeExpr, u: &TypeExpr) -> Decision<Derivation> {
        // Intersection on the right is invertible.
        if let TypeExpr::And(u1, u2) = u {
            let d1 = require!(self.sub(env, s, u1));
            let d2 = require!(self.sub(env, s, u2));
            let j = self.subj(env, s.clone(), u.clone());
            return Decision::Yes(Derivation::new(Rule::SubAnd, j, vec![d1, d2]));
        }
        if let Some(d) = attempt!(self.structural(env, s, u)) {
            return Decision::Yes(d);
        }
        if let TypeExpr::And(s1, s2) = s {
            for (part, rule) in [(s1, Rule::And1), (s2, Rule::And2)] {
                if let Some(d) = attempt!(self.sub(env, part, u)) {
                    let elim = self.axiom(env, rule, s, part);
                    return Decision::Yes(self.trans(elim, d));
                }
            }
        }
        if let TypeExpr::Sel(x, a) = s {
            let ex = match self.expose(env, x) {
                Decision::Yes(e) => e,
                Decision::No => Rc::new(Exposure::default()),
                Decision::Unknown => return Decision::Unknown,
            };
            if let Some(bot) = &ex.bottom {
                let decl = TypeExpr::member(a.clone(), TypeExpr::Bot, u.clone());
                let dx = self.from_bottom(env, bot, &decl);
                let j = self.subj(env, s.clone(), u.clone());
                return Decision::Yes(Derivation::new(Rule::SelSub, j, vec![dx]));
            }
            for (hi, step) in self.climb(env, &ex, x, a) {
                if let Some(d) = attempt!(self.sub(env, &hi, u)) {
                    return Decision::Yes(self.trans(step, d));
                }
            }
        }
        if let TypeExpr::Sel(y, b) = u {
            let ey = match self.expose(env, y) {
                Decision::Yes(e) => e,
                Decision::No => Rc::new(Exposure::default()),
                Decision::Unknown => return Decision::Unknown,
            };
            if let Some(bot) = &ey.bottom {
                let decl = TypeExpr::member(b.clone(), s.clone(), TypeExpr::Top);
                let dy = self.from_bottom(env, bot, &decl);
                let j = self.subj(env, s.clone(), u.clone());
                return Decision::Yes(Derivation::new(Rule::SubSel, j, vec![dy]));
            }
            let members: Vec<(TypeExpr, Derivation)> = ey
                .type_members(b)
                .map(|(lo, _, d)| (lo.clone(), d.clone()))
                .collect();
            for (lo, dy) in members {
                if let Some(d) = attempt!(self.sub(env, s, &lo)) {
                    let j = self.subj(env, lo.clone(), u.clone());
                    let intro = Derivation::new(Rule::SubSel, j, vec![dy]);
                    return Decision::Yes(self.trans(d, intro));
                }
            }
        }
        if self.pivot && !self.in_pivot {
            if let Some(d) = attempt!(self.pivot_through_context(env, s, u)) {
                return Decision::Yes(d);
            }
        }
        self.finish(None)
    }

    fn structural(&mut self, env: &TypeEnv, s: &TypeExpr, u: &TypeExpr) -> Decision<Derivation> {
        let j = Judgment::Sub {
            env: env.clone(),
            sigma: self.sigma.clone(),
            lower: s.clone(),
            upper: u.clone(),
        };
        let j = || j.clone();
        match (s, u) {
            (TypeExpr::FieldDecl(a, t1), TypeExpr::FieldDecl(b, t2)) if a == b => {
                let d = require!(self.sub(env, t1, t2));
                Decision::Yes(Derivation::new(Rule::FldFld, j(), vec![d]))
            }
            (TypeExpr::TypeDecl(a, s1, t1), TypeExpr::TypeDecl(b, s2, t2)) if a == b => {
                let lo = require!(self.sub(env, s2, s1));
                let hi = require!(self.sub(env, t1, t2));
                Decision::Yes(Derivation::new(Rule::TypTyp, j(), vec![lo, hi]))
            }
            (TypeExpr::All(x, s1, t1), TypeExpr::All(y, s2, t2)) => {
                let param = require!(self.sub(env, s2, s1));
                let mut avoid = env.all_names();
                avoid.extend(s.names());
                avoid.extend(u.names());
                let z = fresh_var(x, |v| avoid.contains(v));
                let inner = env.extend(z.clone(), (**s2).clone());
                let res = require!(self.sub(&inner, &t1.subst(x, &z), &t2.subst(y, &z)));
                Decision::Yes(Derivation::new(Rule::AllAll, j(), vec![param, res]))
            }
            (TypeExpr::RefT(t1), TypeExpr::RefT(t2)) => {
                let co = require!(self.sub(env, t1, t2));
                let contra = require!(self.sub(env, t2, t1));
                Decision::Yes(Derivation::new(Rule::RefSub, j(), vec![co, contra]))
            }
            _ => Decision::No,
        }
    }

    /// `s <: lo <: z.A <: hi <: u` for some `z` in the context declaring
    /// `A: lo..hi`. Nested pivots are not attempted.
    fn pivot_through_context(
        &mut self,
        env: &TypeEnv,
        s: &TypeExpr,
        u: &TypeExpr,
    ) -> Decision<Derivation> {
        let vars: Vec<Var> = env.vars().into_iter().cloned().collect();
        for z in vars {
            let ez = match self.expose(env, &z) {
                Decision::Yes(e) => e,
                Decision::No => continue,
                Decision::Unknown => return Decision::Unknown,
            };
            let members: Vec<(Label, TypeExpr, TypeExpr, Derivation)> = ez
                .items
                .iter()
                .filter_map(|e| match &e.ty {
                    TypeExpr::TypeDecl(a, lo, hi) => {
                        Some((a.clone(), (**lo).clone(), (**hi).clone(), e.deriv.clone()))
                    }
                    _ => None,
                })
                .collect();
            for (a, lo, hi, dz) in members {
                let sel = TypeExpr::Sel(z.clone(), a.clone());
                if sel == *s || sel == *u {
                    continue;
                }
                self.in_pivot = true;
                let left = self.sub(env, s, &lo);
                let right = match &left {
                    Decision::Yes(_) => self.sub(env, &hi, u),
                    _ => Decision::No,
                };
                self.in_pivot = false;
                match (left, right) {
                    (Decision::Yes(d1), Decision::Yes(d2)) => {
                        let intro = Derivation::new(
                            Rule::SubSel,
                            self.subj(env, lo.clone(), sel.clone()),
                            vec![dz.clone()],
                        );
                        let elim = Derivation::new(
                            Rule::SelSub,
                            self.subj(env, sel.clone(), hi.clone()),
                            vec![dz],
                        );
                        let l = self.trans(d1, intro);
                        let r = self.trans(elim, d2);
                        return Decision::Yes(self.trans(l, r));
                    }
                    (Decision::Unknown, _) | (_, Decision::Unknown) => return Decision::Unknown,
                    _ => {}
                }
            }
        }
        Decision::No
    }

    // ---- variable typing ----

    pub fn check_var(&mut self, env: &TypeEnv, x: &Var, t: &TypeExpr) -> Decision<Derivation> {
        if !self.tick() {
            return Decision::Unknown;
        }
        let ex = match self.expose(env, x) {
            Decision::Yes(e) => e,
            Decision::No => return Decision::No,
            Decision::Unknown => return Decision::Unknown,
        };
        if let Some(e) = ex.items.iter().find(|e| e.ty.alpha_eq(t)) {
            return Decision::Yes(e.deriv.clone());
        }
        if *t == TypeExpr::Top {
            let top = self.axiom(env, Rule::Top, &ex.items[0].ty, t);
            return Decision::Yes(self.subsume(ex.items[0].deriv.clone(), top));
        }
        if let Some(bot) = &ex.bottom {
            return Decision::Yes(self.from_bottom(env, bot, t));
        }
        let goal = Goal::Var(
            env.clone(),
            x.clone(),
            t.clone(),
            self.pivot && !self.in_pivot,
        );
        self.with_goal(goal, |me| me.check_var_rules(env, x, t, &ex))
    }

    fn check_var_rules(
        &mut self,
        env: &TypeEnv,
        x: &Var,
        t: &TypeExpr,
        ex: &Exposure,
    ) -> Decision<Derivation> {
        let xv = || Term::Var(x.clone());
        match t {
            TypeExpr::And(a, b) => {
                let da = require!(self.check_var(env, x, a));
                let db = require!(self.check_var(env, x, b));
                let j = self.typed(env, xv(), t.clone());
                return Decision::Yes(Derivation::new(Rule::AndI, j, vec![da, db]));
            }
            TypeExpr::Rec(z, body) => {
                if let Some(d) = attempt!(self.check_var(env, x, &body.subst(z, x))) {
                    let j = self.typed(env, xv(), t.clone());
                    return Decision::Yes(Derivation::new(Rule::RecI, j, vec![d]));
                }
            }
            TypeExpr::Sel(p, b) => {
                let ep = match self.expose(env, p) {
                    Decision::Yes(e) => e,
                    Decision::No => Rc::new(Exposure::default()),
                    Decision::Unknown => return Decision::Unknown,
                };
                if let Some(bot) = &ep.bottom {
                    let own = ex.items[0].ty.clone();
                    let decl = TypeExpr::member(b.clone(), own.clone(), TypeExpr::Top);
                    let dp = self.from_bottom(env, bot, &decl);
                    let intro =
                        Derivation::new(Rule::SubSel, self.subj(env, own, t.clone()), vec![dp]);
                    return Decision::Yes(self.subsume(ex.items[0].deriv.clone(), intro));
                }
                let members: Vec<(TypeExpr, Derivation)> = ep
                    .type_members(b)
                    .map(|(lo, _, d)| (lo.clone(), d.clone()))
                    .collect();
                for (lo, dp) in members {
                    if let Some(dx) = attempt!(self.check_var(env, x, &lo)) {
                        let intro = Derivation::new(
                            Rule::SubSel,
                            self.subj(env, lo.clone(), t.clone()),
                            vec![dp],
                        );
                        return Decision::Yes(self.subsume(dx, intro));
                    }
                }
            }
            _ => {}
        }
        for e in &ex.items {
            if matches!(e.ty, TypeExpr::Rec(..) | TypeExpr::And(..)) {
                continue;
            }
            if let Some(d) = attempt!(self.sub(env, &e.ty, t)) {
                return Decision::Yes(self.subsume(e.deriv.clone(), d));
            }
        }
        self.finish(None)
    }
}
