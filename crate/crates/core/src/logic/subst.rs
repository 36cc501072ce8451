use std::fmt;

use smallvec::SmallVec;

use super::{Atom, GroundAtom, Symbol, Term};

/// A functional binding of variables to constants.
///
/// Bindings are kept sorted by variable id so that structural equality is
/// map equality.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    bindings: SmallVec<[(Symbol, Symbol); 4]>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Symbol, Symbol)>) -> Substitution {
        let mut s = Substitution::new();
        for (v, c) in pairs {
            s.bind(v, c);
        }
        s
    }

    pub fn get(&self, var: Symbol) -> Option<Symbol> {
        self.position(var).ok().map(|i| self.bindings[i].1)
    }

    fn position(&self, var: Symbol) -> Result<usize, usize> {
        self.bindings.binary_search_by_key(&var.id(), |(v, _)| v.id())
    }

    /// Binds `var` to `value`. Returns false, leaving the substitution
    /// unchanged, if `var` is already bound to a different constant.
    pub fn bind(&mut self, var: Symbol, value: Symbol) -> bool {
        match self.position(var) {
            Ok(i) => self.bindings[i].1 == value,
            Err(i) => {
                self.bindings.insert(i, (var, value));
                true
            }
        }
    }

    pub(crate) fn unbind(&mut self, var: Symbol) {
        if let Ok(i) = self.position(var) {
            self.bindings.remove(i);
        }
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, Symbol)> + '_ {
        self.bindings.iter().copied()
    }

    /// True if every binding of `other` is also a binding of `self`.
    pub fn extends(&self, other: &Substitution) -> bool {
        other.iter().all(|(v, c)| self.get(v) == Some(c))
    }

    pub fn apply(&self, atom: &Atom) -> Atom {
        apply(self, atom)
    }

    /// Grounds `atom`, or `None` if some variable is unbound.
    pub fn ground(&self, atom: &Atom) -> Option<GroundAtom> {
        let mut args = SmallVec::new();
        for t in &atom.args {
            match *t {
                Term::Const(c) => args.push(c),
                Term::Var(v) => args.push(self.get(v)?),
            }
        }
        Some(GroundAtom {
            pred: atom.pred,
            args,
        })
    }
}

/// Replaces bound variables of `atom` by their constants; unbound variables
/// are left in place.
pub fn apply(sub: &Substitution, atom: &Atom) -> Atom {
    Atom {
        pred: atom.pred,
        args: atom
            .args
            .iter()
            .map(|t| match *t {
                Term::Var(v) => sub.get(v).map_or(*t, Term::Const),
                c => c,
            })
            .collect(),
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut pairs: Vec<_> = self.bindings.iter().collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        f.write_str("{")?;
        for (i, (v, c)) in pairs.into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{c}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Symbol {
        Symbol::intern(s)
    }

    #[test]
    fn apply_binds_known_variables() {
        let on_xy = Atom::new("on", [Term::var("X"), Term::var("Y")]);
        let sub = Substitution::from_pairs([(sym("X"), sym("a"))]);
        assert_eq!(apply(&sub, &on_xy).to_string(), "on(a,Y)");
        assert!(!apply(&sub, &on_xy).is_ground());
    }

    #[test]
    fn identity_substitution() {
        let on_ab = Atom::new("on", [Term::constant("a"), Term::constant("b")]);
        assert_eq!(apply(&Substitution::new(), &on_ab), on_ab);
    }

    #[test]
    fn unused_bindings_are_ignored() {
        let clear_x = Atom::new("clear", [Term::var("X")]);
        let sub = Substitution::from_pairs([(sym("X"), sym("a")), (sym("Y"), sym("b"))]);
        let out = apply(&sub, &clear_x);
        assert_eq!(out.to_string(), "clear(a)");
        assert!(out.is_ground());
    }

    #[test]
    fn bind_is_functional() {
        let mut s = Substitution::new();
        assert!(s.bind(sym("X"), sym("a")));
        assert!(s.bind(sym("X"), sym("a")));
        assert!(!s.bind(sym("X"), sym("b")));
        assert_eq!(s.get(sym("X")), Some(sym("a")));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn equality_is_order_independent() {
        let a = Substitution::from_pairs([(sym("X"), sym("a")), (sym("Y"), sym("b"))]);
        let b = Substitution::from_pairs([(sym("Y"), sym("b")), (sym("X"), sym("a"))]);
        assert_eq!(a, b);
        assert!(a.extends(&Substitution::from_pairs([(sym("Y"), sym("b"))])));
        assert!(!a.extends(&Substitution::from_pairs([(sym("Y"), sym("a"))])));
    }
}
