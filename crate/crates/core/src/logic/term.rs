use std::fmt;

use smallvec::SmallVec;

use super::Symbol;

/// A constant (object name) or a variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Symbol::intern(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::intern(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn symbol(&self) -> Symbol {
        match *self {
            Term::Const(s) | Term::Var(s) => s,
        }
    }

    pub fn as_var(&self) -> Option<Symbol> {
        match *self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Predicate name together with its arity, e.g. `move/2`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub name: Symbol,
    pub arity: usize,
}

impl Predicate {
    pub fn new(name: &str, arity: usize) -> Predicate {
        Predicate {
            name: Symbol::intern(name),
            arity,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) type Args<T> = SmallVec<[T; 3]>;

/// A possibly non-ground atom `pred(t1, ..., tn)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: Symbol,
    pub args: SmallVec<[Term; 3]>,
}

impl Atom {
    pub fn new(pred: &str, args: impl IntoIterator<Item = Term>) -> Atom {
        Atom {
            pred: Symbol::intern(pred),
            args: args.into_iter().collect(),
        }
    }

    pub fn predicate(&self) -> Predicate {
        Predicate {
            name: self.pred,
            arity: self.args.len(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn vars(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn to_ground(&self) -> Option<GroundAtom> {
        let mut args = Args::new();
        for t in &self.args {
            match *t {
                Term::Const(c) => args.push(c),
                Term::Var(_) => return None,
            }
        }
        Some(GroundAtom {
            pred: self.pred,
            args,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_call(f, self.pred, self.args.iter())
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A ground atom: a fact of a state, or a ground action.
///
/// The derived ordering is lexicographic on predicate name, then on the
/// argument names.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: Symbol,
    pub args: SmallVec<[Symbol; 3]>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: &[&str]) -> GroundAtom {
        GroundAtom {
            pred: Symbol::intern(pred),
            args: args.iter().map(|a| Symbol::intern(a)).collect(),
        }
    }

    pub fn from_symbols(pred: Symbol, args: impl IntoIterator<Item = Symbol>) -> GroundAtom {
        GroundAtom {
            pred,
            args: args.into_iter().collect(),
        }
    }

    pub fn predicate(&self) -> Predicate {
        Predicate {
            name: self.pred,
            arity: self.args.len(),
        }
    }

    pub fn to_atom(&self) -> Atom {
        Atom {
            pred: self.pred,
            args: self.args.iter().map(|&c| Term::Const(c)).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_call(f, self.pred, self.args.iter())
    }
}

impl fmt::Debug for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn write_call<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    pred: Symbol,
    args: impl Iterator<Item = T>,
) -> fmt::Result {
    write!(f, "{pred}(")?;
    for (i, a) in args.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

/// An atom, possibly negated (negation as failure).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Literal {
        Literal {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: Atom) -> Literal {
        Literal {
            atom,
            negated: true,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        write!(f, "{}", self.atom)
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Ordered conjunction of literals. Shared variable names denote the same
/// binding across literals. The empty conjunction is `true`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Conjunction {
    pub literals: Vec<Literal>,
}

impl Conjunction {
    pub fn new(literals: Vec<Literal>) -> Conjunction {
        Conjunction { literals }
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    /// Variables in first-occurrence order, without duplicates.
    pub fn vars(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for v in self.literals.iter().flat_map(|l| l.atom.vars()) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("true");
        }
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
