use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::parser::pretty_type;
use crate::syntax::{Binding, Loc, TypeExpr, Var};

/// Typing context `x1: T1, ..., xn: Tn`. Persistent: extending shares the
/// prefix, so derivation nodes can hold their own context cheaply.
#[derive(Clone, Default)]
pub struct TypeEnv(Option<Arc<Node>>);

struct Node {
    var: Var,
    ty: TypeExpr,
    parent: TypeEnv,
    len: usize,
    hash: u64,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv(None)
    }

    pub fn extend(&self, var: Var, ty: TypeExpr) -> TypeEnv {
        let mut h = DefaultHasher::new();
        self.cached_hash().hash(&mut h);
        var.hash(&mut h);
        ty.hash(&mut h);
        TypeEnv(Some(Arc::new(Node {
            var,
            ty,
            parent: self.clone(),
            len: self.len() + 1,
            hash: h.finish(),
        })))
    }

    pub fn from_bindings<I: IntoIterator<Item = (Var, TypeExpr)>>(items: I) -> TypeEnv {
        items
            .into_iter()
            .fold(TypeEnv::new(), |env, (x, t)| env.extend(x, t))
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    fn cached_hash(&self) -> u64 {
        self.0.as_ref().map_or(0, |n| n.hash)
    }

    pub fn lookup(&self, x: &Var) -> Option<&TypeExpr> {
        let mut cur = self;
        while let Some(n) = &cur.0 {
            if &n.var == x {
                return Some(&n.ty);
            }
            cur = &n.parent;
        }
        None
    }

    pub fn contains(&self, x: &Var) -> bool {
        self.lookup(x).is_some()
    }

    /// Bindings in order, oldest first.
    pub fn bindings(&self) -> Vec<(&Var, &TypeExpr)> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = self;
        while let Some(n) = &cur.0 {
            out.push((&n.var, &n.ty));
            cur = &n.parent;
        }
        out.reverse();
        out
    }

    pub fn vars(&self) -> Vec<&Var> {
        self.bindings().into_iter().map(|(x, _)| x).collect()
    }

    /// The most recent binding and the context before it.
    pub fn split_last(&self) -> Option<(&Var, &TypeExpr, &TypeEnv)> {
        self.0.as_ref().map(|n| (&n.var, &n.ty, &n.parent))
    }

    pub fn ptr_eq(&self, other: &TypeEnv) -> bool {
        match (&self.0, &other.0) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }

    /// Names bound here, together with every name mentioned in their types.
    pub fn all_names(&self) -> std::collections::BTreeSet<Var> {
        let mut out = std::collections::BTreeSet::new();
        for (x, t) in self.bindings() {
            out.insert(x.clone());
            t.collect_names(&mut out);
        }
        out
    }
}

impl PartialEq for TypeEnv {
    fn eq(&self, other: &TypeEnv) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        match (&self.0, &other.0) {
            (Some(a), Some(b)) => {
                a.len == b.len
                    && a.hash == b.hash
                    && a.var == b.var
                    && a.ty == b.ty
                    && a.parent == b.parent
            }
            _ => false,
        }
    }
}

impl Eq for TypeEnv {}

impl Hash for TypeEnv {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.cached_hash().hash(state)
    }
}

impl fmt::Debug for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items = self.bindings();
        if items.is_empty() {
            return f.write_str("{}");
        }
        for (i, (x, t)) in items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}: {}", pretty_type(t))?;
        }
        Ok(())
    }
}

impl Serialize for TypeEnv {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let items = self.bindings();
        let mut seq = s.serialize_seq(Some(items.len()))?;
        for item in items {
            seq.serialize_element(&item)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for TypeEnv {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<TypeEnv, D::Error> {
        let items = Vec::<(Var, TypeExpr)>::deserialize(d)?;
        Ok(TypeEnv::from_bindings(items))
    }
}

/// Store typing: the type of variables each location may hold.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct StoreTyping(Arc<BTreeMap<Loc, TypeExpr>>);

impl StoreTyping {
    pub fn new() -> StoreTyping {
        StoreTyping::default()
    }

    pub fn get(&self, l: Loc) -> Option<&TypeExpr> {
        self.0.get(&l)
    }

    pub fn insert(&mut self, l: Loc, t: TypeExpr) {
        Arc::make_mut(&mut self.0).insert(l, t);
    }

    pub fn with(&self, l: Loc, t: TypeExpr) -> StoreTyping {
        let mut s = self.clone();
        s.insert(l, t);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (Loc, &TypeExpr)> {
        self.0.iter().map(|(l, t)| (*l, t))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every entry of `self` is present, unchanged, in `other`.
    pub fn is_extended_by(&self, other: &StoreTyping) -> bool {
        self.iter().all(|(l, t)| other.get(l) == Some(t))
    }
}

impl FromIterator<(Loc, TypeExpr)> for StoreTyping {
    fn from_iter<I: IntoIterator<Item = (Loc, TypeExpr)>>(iter: I) -> StoreTyping {
        StoreTyping(Arc::new(iter.into_iter().collect()))
    }
}

impl fmt::Debug for StoreTyping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for StoreTyping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (l, t)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", l.0, pretty_type(t))?;
        }
        f.write_str("}")
    }
}

impl Serialize for StoreTyping {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let items: Vec<(Loc, &TypeExpr)> = self.iter().collect();
        items.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StoreTyping {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<StoreTyping, D::Error> {
        Ok(Vec::<(Loc, TypeExpr)>::deserialize(d)?
            .into_iter()
            .collect())
    }
}

/// Applies `[to/from]` to every type in the range of `sigma`.
pub fn subst_store_typing(sigma: &StoreTyping, from: &Var, to: &Var) -> StoreTyping {
    sigma.iter().map(|(l, t)| (l, t.subst(from, to))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::TypeExpr as T;

    #[test]
    fn env_lookup_and_order() {
        let env = TypeEnv::new()
            .extend(Var::new("x"), T::Top)
            .extend(Var::new("y"), T::sel("x", "A"));
        assert_eq!(env.lookup(&Var::new("y")), Some(&T::sel("x", "A")));
        assert_eq!(env.vars(), vec![&Var::new("x"), &Var::new("y")]);
        let again =
            TypeEnv::from_bindings([(Var::new("x"), T::Top), (Var::new("y"), T::sel("x", "A"))]);
        assert_eq!(env, again);
        assert_ne!(env, TypeEnv::new().extend(Var::new("x"), T::Top));
    }

    #[test]
    fn subst_store_typing_cases() {
        let x = Var::new("x");
        let y = Var::new("y");
        assert!(subst_store_typing(&StoreTyping::new(), &x, &y).is_empty());
        let one: StoreTyping = [(Loc(0), T::sel("x", "A"))].into_iter().collect();
        let expected: StoreTyping = [(Loc(0), T::sel("y", "A"))].into_iter().collect();
        assert_eq!(subst_store_typing(&one, &x, &y), expected);
    }
}
