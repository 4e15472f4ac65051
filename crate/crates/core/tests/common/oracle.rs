//! Brute-force declarative search, used to confirm negative answers.
//!
//! Tries every rule at every node up to a derivation depth. The premises of
//! Trans, Sub, Sel-<: and <:-Sel mention a type that does not appear in the
//! conclusion; those are drawn from a finite universe: every subterm of the
//! goal and context types, their openings at context variables, plus Top and
//! Bot.

use std::collections::HashMap;

use mdot::syntax::{Binding, TypeExpr, Var};

#[derive(Clone, PartialEq, Eq, Hash)]
enum Goal {
    Sub(TypeExpr, TypeExpr),
    Typed(Var, TypeExpr),
}

pub struct Oracle {
    env: Vec<(Var, TypeExpr)>,
    universe: Vec<TypeExpr>,
    memo: HashMap<(Goal, usize), bool>,
}

fn subterms(t: &TypeExpr, out: &mut Vec<TypeExpr>) {
    if !out.contains(t) {
        out.push(t.clone());
    }
    match t {
        TypeExpr::FieldDecl(_, a) | TypeExpr::RefT(a) => subterms(a, out),
        TypeExpr::TypeDecl(_, a, b) | TypeExpr::And(a, b) => {
            subterms(a, out);
            subterms(b, out);
        }
        TypeExpr::Rec(_, a) => subterms(a, out),
        TypeExpr::All(_, a, b) => {
            subterms(a, out);
            subterms(b, out);
        }
        _ => {}
    }
}

impl Oracle {
    pub fn new(env: &[(Var, TypeExpr)], goal_types: &[&TypeExpr]) -> Oracle {
        let mut universe = vec![TypeExpr::Top, TypeExpr::Bot];
        for t in goal_types.iter().copied().chain(env.iter().map(|(_, t)| t)) {
            subterms(t, &mut universe);
        }
        // Openings of recursive types at every context variable.
        let recs: Vec<TypeExpr> = universe.clone();
        for r in recs {
            if let TypeExpr::Rec(z, body) = &r {
                for (x, _) in env {
                    subterms(&body.subst(z, x), &mut universe);
                }
            }
        }
        // Selections on context variables of every type label in sight.
        let mut labels = Vec::new();
        for t in &universe {
            if let TypeExpr::TypeDecl(a, _, _) = t {
                if !labels.contains(a) {
                    labels.push(a.clone());
                }
            }
        }
        for (x, _) in env {
            for a in &labels {
                subterms(&TypeExpr::Sel(x.clone(), a.clone()), &mut universe);
            }
        }
        // Keep only types that are closed under the context.
        universe.retain(|t| {
            t.free_vars()
                .iter()
                .all(|v| env.iter().any(|(x, _)| x == v))
        });
        Oracle {
            env: env.to_vec(),
            universe,
            memo: HashMap::new(),
        }
    }

    pub fn universe_size(&self) -> usize {
        self.universe.len()
    }

    fn lookup(&self, x: &Var) -> Option<&TypeExpr> {
        self.env.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn subtype(&mut self, s: &TypeExpr, u: &TypeExpr, depth: usize) -> bool {
        self.solve(Goal::Sub(s.clone(), u.clone()), depth)
    }

    pub fn typed(&mut self, x: &Var, t: &TypeExpr, depth: usize) -> bool {
        self.solve(Goal::Typed(x.clone(), t.clone()), depth)
    }

    fn solve(&mut self, goal: Goal, depth: usize) -> bool {
        if depth == 0 {
            return false;
        }
        if let Some(&r) = self.memo.get(&(goal.clone(), depth)) {
            return r;
        }
        // Derivable at depth d implies derivable at any larger depth.
        if depth > 1 && self.solve(goal.clone(), depth - 1) {
            return true;
        }
        let r = match &goal {
            Goal::Sub(s, u) => self.sub_rules(s, u, depth - 1),
            Goal::Typed(x, t) => self.typed_rules(x, t, depth - 1),
        };
        self.memo.insert((goal, depth), r);
        r
    }

    fn sub_rules(&mut self, s: &TypeExpr, u: &TypeExpr, d: usize) -> bool {
        use TypeExpr as T;
        if s.alpha_eq(u) || *u == T::Top || *s == T::Bot {
            return true;
        }
        if let T::And(a, b) = s {
            if (**a).alpha_eq(u) || (**b).alpha_eq(u) {
                return true;
            }
        }
        if d == 0 {
            return false;
        }
        if let T::And(a, b) = u {
            if self.subtype(s, a, d) && self.subtype(s, b, d) {
                return true;
            }
        }
        match (s, u) {
            (T::FieldDecl(a, t1), T::FieldDecl(b, t2)) if a == b && self.subtype(t1, t2, d) => {
                return true
            }
            (T::TypeDecl(a, s1, t1), T::TypeDecl(b, s2, t2))
                if a == b && self.subtype(s2, s1, d) && self.subtype(t1, t2, d) =>
            {
                return true
            }
            (T::RefT(t1), T::RefT(t2)) if self.subtype(t1, t2, d) && self.subtype(t2, t1, d) => {
                return true
            }
            (T::All(x, s1, t1), T::All(y, s2, t2)) if self.subtype(s2, s1, d) => {
                let mut names = std::collections::BTreeSet::new();
                for (v, t) in &self.env {
                    names.insert(v.clone());
                    names.extend(t.names());
                }
                names.extend(s.names());
                names.extend(u.names());
                let mut z = format!("{}", x.as_str());
                while names.contains(&Var::new(&z)) {
                    z.push('\'');
                }
                let z = Var::new(z);
                let mut env = self.env.clone();
                env.push((z.clone(), (**s2).clone()));
                let (l, r) = (t1.subst(x, &z), t2.subst(y, &z));
                let mut inner = Oracle::new(&env, &[&l, &r]);
                if inner.subtype(&l, &r, d) {
                    return true;
                }
            }
            _ => {}
        }
        let universe = self.universe.clone();
        if let T::Sel(x, a) = s {
            for lo in &universe {
                let decl = T::TypeDecl(a.clone(), Box::new(lo.clone()), Box::new(u.clone()));
                if self.typed(x, &decl, d) {
                    return true;
                }
            }
        }
        if let T::Sel(x, a) = u {
            for hi in &universe {
                let decl = T::TypeDecl(a.clone(), Box::new(s.clone()), Box::new(hi.clone()));
                if self.typed(x, &decl, d) {
                    return true;
                }
            }
        }
        universe
            .iter()
            .any(|m| self.subtype(s, m, d) && self.subtype(m, u, d))
    }

    fn typed_rules(&mut self, x: &Var, t: &TypeExpr, d: usize) -> bool {
        use TypeExpr as T;
        if self.lookup(x).is_some_and(|e| e.alpha_eq(t)) {
            return true;
        }
        if d == 0 {
            return false;
        }
        match t {
            T::Rec(z, body) if self.typed(x, &body.subst(z, x), d) => return true,
            T::And(a, b) if self.typed(x, a, d) && self.typed(x, b, d) => return true,
            _ => {}
        }
        let universe = self.universe.clone();
        for m in &universe {
            if let T::Rec(z, body) = m {
                if (**body).subst(z, x).alpha_eq(t) && self.typed(x, m, d) {
                    return true;
                }
            }
        }
        universe
            .iter()
            .any(|m| self.typed(x, m, d) && self.subtype(m, t, d))
    }
}
