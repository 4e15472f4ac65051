use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::parser::pretty_value;
use crate::syntax::{Binding, Loc, Term, Value, Var};

/// The mutable store: each location holds a variable.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Store(BTreeMap<Loc, Var>);

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    pub fn get(&self, l: Loc) -> Option<&Var> {
        self.0.get(&l)
    }

    /// `store[l -> x]`. Returns the previous occupant.
    pub fn set(&mut self, l: Loc, x: Var) -> Option<Var> {
        self.0.insert(l, x)
    }

    pub fn contains(&self, l: Loc) -> bool {
        self.0.contains_key(&l)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Loc, &Var)> {
        self.0.iter().map(|(l, x)| (*l, x))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map_vars(&self, f: impl Fn(&Var) -> Var) -> Store {
        Store(self.0.iter().map(|(l, x)| (*l, f(x))).collect())
    }
}

impl FromIterator<(Loc, Var)> for Store {
    fn from_iter<I: IntoIterator<Item = (Loc, Var)>>(iter: I) -> Store {
        Store(iter.into_iter().collect())
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (l, x)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} -> {x}", l.0)?;
        }
        f.write_str("}")
    }
}

/// Smallest location not in use.
pub fn fresh_location(store: &Store) -> Loc {
    let mut next = 0;
    for (l, _) in store.iter() {
        if l.0 != next {
            break;
        }
        next += 1;
    }
    Loc(next)
}

/// Let-bound values, oldest first.
#[derive(Clone, Default, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Stack(Vec<(Var, Value)>);

impl Stack {
    pub fn new() -> Stack {
        Stack::default()
    }

    pub fn push(&mut self, x: Var, v: Value) {
        self.0.push((x, v));
    }

    /// The most recent binding of `x`.
    pub fn lookup(&self, x: &Var) -> Option<&Value> {
        self.0.iter().rev().find(|(y, _)| y == x).map(|(_, v)| v)
    }

    pub fn contains(&self, x: &Var) -> bool {
        self.lookup(x).is_some()
    }

    pub fn bindings(&self) -> &[(Var, Value)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether `self` is a prefix of `other`.
    pub fn is_prefix_of(&self, other: &Stack) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Any name bound or mentioned on the stack.
    pub fn mentions(&self, x: &Var) -> bool {
        self.0
            .iter()
            .any(|(y, v)| y == x || Term::Val(v.clone()).names().contains(x))
    }
}

impl FromIterator<(Var, Value)> for Stack {
    fn from_iter<I: IntoIterator<Item = (Var, Value)>>(iter: I) -> Stack {
        Stack(iter.into_iter().collect())
    }
}

impl fmt::Display for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (x, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x} = {}", pretty_value(v))?;
        }
        f.write_str("]")
    }
}
