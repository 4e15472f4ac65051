//! Greedy shrinking of failing programs.

use crate::syntax::{Binding, Def, Term, TypeExpr, Value};
use crate::typecheck::{typecheck_program, Fuel};

fn identity() -> Term {
    Term::lambda("z", TypeExpr::Top, Term::var("z"))
}

/// Terms one simplification away from `t`.
fn candidates(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    match t {
        Term::Let(x, e, u) => {
            if !u.occurs_free(x) {
                out.push((**u).clone());
            }
            if **e != identity() {
                out.push(Term::let_in(x.clone(), identity(), (**u).clone()));
            }
            for e2 in candidates(e) {
                out.push(Term::let_in(x.clone(), e2, (**u).clone()));
            }
            for u2 in candidates(u) {
                out.push(Term::let_in(x.clone(), (**e).clone(), u2));
            }
        }
        Term::Val(Value::Lam(z, s, body)) => {
            if *s != TypeExpr::Top {
                out.push(Term::lambda(z.clone(), TypeExpr::Top, (**body).clone()));
            }
            for b in candidates(body) {
                out.push(Term::lambda(z.clone(), s.clone(), b));
            }
        }
        Term::Val(Value::Obj(s, ty, d)) => {
            for d2 in def_candidates(d) {
                out.push(Term::object(s.clone(), ty.clone(), d2));
            }
        }
        _ => {}
    }
    out
}

fn def_candidates(d: &Def) -> Vec<Def> {
    match d {
        Def::Field(a, t) => candidates(t)
            .into_iter()
            .map(|t2| Def::field(a.clone(), t2))
            .collect(),
        Def::Type(..) => Vec::new(),
        Def::And(l, r) => {
            let mut out: Vec<Def> = def_candidates(l)
                .into_iter()
                .map(|l2| Def::and(l2, (**r).clone()))
                .collect();
            out.extend(
                def_candidates(r)
                    .into_iter()
                    .map(|r2| Def::and((**l).clone(), r2)),
            );
            out
        }
    }
}

/// Repeatedly replaces `t` by a smaller well-typed variant on which `fails`
/// still holds.
pub fn shrink(t: &Term, fuel: Fuel, fails: &dyn Fn(&Term) -> bool) -> Term {
    let mut cur = t.clone();
    'outer: for _ in 0..200 {
        for c in candidates(&cur) {
            if c.size() <= cur.size()
                && c != cur
                && typecheck_program(&c, fuel).is_ok()
                && fails(&c)
            {
                cur = c;
                continue 'outer;
            }
        }
        break;
    }
    cur
}
