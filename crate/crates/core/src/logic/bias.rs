use std::collections::BTreeMap;
use std::fmt;

use super::{BiasError, Conjunction, Predicate, Symbol};

/// Role of one argument position in a mode declaration; each carries the
/// argument's type tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArgMode {
    /// Must reuse an in-scope variable of the type.
    Input(Symbol),
    /// Introduces a fresh variable of the type.
    Output(Symbol),
    /// Enumerates declared constants of the type.
    Const(Symbol),
}

impl ArgMode {
    pub fn type_tag(&self) -> Symbol {
        match *self {
            ArgMode::Input(t) | ArgMode::Output(t) | ArgMode::Const(t) => t,
        }
    }
}

/// Language-bias declaration for one predicate usable in split tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeDecl {
    pub pred: Symbol,
    pub args: Vec<ArgMode>,
}

impl ModeDecl {
    pub fn predicate(&self) -> Predicate {
        Predicate {
            name: self.pred,
            arity: self.args.len(),
        }
    }
}

impl fmt::Display for ModeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match a {
                ArgMode::Input(t) => write!(f, "+{t}")?,
                ArgMode::Output(t) => write!(f, "-{t}")?,
                ArgMode::Const(t) => write!(f, "#{t}")?,
            }
        }
        f.write_str(")")
    }
}

/// Argument types of a lifted action type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDecl {
    pub pred: Symbol,
    pub arg_types: Vec<Symbol>,
}

impl ActionDecl {
    pub fn new(pred: &str, arg_types: &[&str]) -> ActionDecl {
        ActionDecl {
            pred: Symbol::intern(pred),
            arg_types: arg_types.iter().map(|t| Symbol::intern(t)).collect(),
        }
    }

    pub fn predicate(&self) -> Predicate {
        Predicate {
            name: self.pred,
            arity: self.arg_types.len(),
        }
    }
}

/// Canonical variable names bound to an action's arguments: `A`, `B`, ...
pub fn action_variables(arity: usize) -> Vec<Symbol> {
    (0..arity)
        .map(|i| {
            let c = char::from(b'A' + u8::try_from(i % 26).expect("small"));
            if i < 26 {
                Symbol::intern(&c.to_string())
            } else {
                Symbol::intern(&format!("{c}{}", i / 26))
            }
        })
        .collect()
}

/// Mode declarations, action signatures and the typed constants that `#`
/// arguments may enumerate.
#[derive(Clone, Debug, Default)]
pub struct LanguageBias {
    modes: Vec<ModeDecl>,
    actions: Vec<ActionDecl>,
    constants: BTreeMap<Symbol, Vec<Symbol>>,
}

impl LanguageBias {
    pub fn new(modes: Vec<ModeDecl>, actions: Vec<ActionDecl>) -> Result<LanguageBias, BiasError> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].iter().any(|o| o.pred == m.pred) {
                return Err(BiasError::DuplicateMode(m.pred.to_string()));
            }
        }
        Ok(LanguageBias {
            modes,
            actions,
            constants: BTreeMap::new(),
        })
    }

    pub fn with_constants(mut self, type_tag: &str, constants: &[&str]) -> LanguageBias {
        self.constants.insert(
            Symbol::intern(type_tag),
            constants.iter().map(|c| Symbol::intern(c)).collect(),
        );
        self
    }

    pub fn modes(&self) -> &[ModeDecl] {
        &self.modes
    }

    pub fn actions(&self) -> &[ActionDecl] {
        &self.actions
    }

    pub fn constants_of(&self, type_tag: Symbol) -> &[Symbol] {
        self.constants.get(&type_tag).map_or(&[], Vec::as_slice)
    }

    pub fn mode_for(&self, pred: Symbol) -> Result<&ModeDecl, BiasError> {
        self.modes
            .iter()
            .find(|m| m.pred == pred)
            .ok_or_else(|| BiasError::MissingMode(pred.to_string()))
    }

    pub fn action(&self, pred: Predicate) -> Result<&ActionDecl, BiasError> {
        self.actions
            .iter()
            .find(|a| a.predicate() == pred)
            .ok_or_else(|| BiasError::UnknownAction(pred.to_string()))
    }

    /// Every literal of `conj` must use a declared predicate at its
    /// declared arity.
    pub fn check(&self, conj: &Conjunction) -> Result<(), BiasError> {
        for l in &conj.literals {
            let mode = self.mode_for(l.atom.pred)?;
            if mode.args.len() != l.atom.args.len() {
                return Err(BiasError::ArityMismatch {
                    mode: mode.to_string(),
                    literal: l.to_string(),
                });
            }
        }
        Ok(())
    }
}
