//! Function symbols and vocabularies.

use std::collections::BTreeMap;

use crate::value::{name, Name};

/// Names reserved for the logic and arithmetic symbols every vocabulary carries.
pub const LOGIC_SYMBOLS: &[(&str, usize, bool)] = &[
    ("true", 0, false),
    ("false", 0, false),
    ("undef", 0, false),
    ("=", 2, true),
    ("not", 1, true),
    ("and", 2, true),
    ("or", 2, true),
    ("Bool", 1, true),
    ("+", 2, false),
    ("-", 2, false),
    ("mod", 2, false),
];

/// The agent-assignment function of distributed programs.
pub const MOD: &str = "Mod";
/// The self-reference of an agent inside its view.
pub const ME: &str = "Me";
/// The universe of agents.
pub const AGENTS: &str = "Agents";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionSymbol {
    pub name: Name,
    pub arity: usize,
    pub is_predicate: bool,
    pub is_external: bool,
    pub is_static: bool,
}

impl FunctionSymbol {
    pub fn dynamic(n: &str, arity: usize) -> Self {
        FunctionSymbol {
            name: name(n),
            arity,
            is_predicate: false,
            is_external: false,
            is_static: false,
        }
    }

    pub fn external(n: &str, arity: usize) -> Self {
        FunctionSymbol {
            is_external: true,
            ..Self::dynamic(n, arity)
        }
    }

    pub fn constant(n: &str, arity: usize) -> Self {
        FunctionSymbol {
            is_static: true,
            ..Self::dynamic(n, arity)
        }
    }

    pub fn predicate(n: &str, arity: usize) -> Self {
        FunctionSymbol {
            is_predicate: true,
            ..Self::dynamic(n, arity)
        }
    }

    pub fn is_logic(&self) -> bool {
        is_logic_symbol(&self.name)
    }
}

pub fn is_logic_symbol(n: &str) -> bool {
    LOGIC_SYMBOLS.iter().any(|(s, _, _)| *s == n)
}

/// A finite collection of function symbols, always containing the logic symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: BTreeMap<Name, FunctionSymbol>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut symbols = BTreeMap::new();
        for &(n, arity, is_predicate) in LOGIC_SYMBOLS {
            symbols.insert(
                name(n),
                FunctionSymbol {
                    name: name(n),
                    arity,
                    is_predicate,
                    is_external: false,
                    is_static: true,
                },
            );
        }
        Vocabulary { symbols }
    }

    /// A vocabulary for distributed programs: logic symbols plus `Mod` and `Me`.
    pub fn distributed() -> Self {
        let mut v = Self::new();
        v.insert(FunctionSymbol::constant(MOD, 1));
        v.insert(FunctionSymbol::dynamic(ME, 0));
        v
    }

    pub fn get(&self, n: &str) -> Option<&FunctionSymbol> {
        self.symbols.get(n)
    }

    pub fn contains(&self, n: &str) -> bool {
        self.symbols.contains_key(n)
    }

    /// Inserts or replaces a symbol.
    pub fn insert(&mut self, sym: FunctionSymbol) {
        self.symbols.insert(sym.name.clone(), sym);
    }

    pub fn iter(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.symbols.values()
    }

    /// Non-logic symbols, sorted by name.
    pub fn user_symbols(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.symbols.values().filter(|s| !s.is_logic())
    }

    pub fn externals(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.symbols.values().filter(|s| s.is_external)
    }

    /// Union of two vocabularies; flags of `other` are OR-ed into existing entries.
    /// Returns the name of the first symbol whose arities disagree.
    pub fn merge(&mut self, other: &Vocabulary) -> Result<(), Name> {
        for sym in other.iter() {
            match self.symbols.get_mut(&sym.name) {
                Some(existing) => {
                    if existing.arity != sym.arity {
                        return Err(sym.name.clone());
                    }
                    existing.is_predicate |= sym.is_predicate;
                    existing.is_external |= sym.is_external;
                    existing.is_static |= sym.is_static;
                }
                None => {
                    self.symbols.insert(sym.name.clone(), sym.clone());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_vocabulary_has_logic_symbols() {
        let v = Vocabulary::new();
        for n in ["true", "false", "undef", "=", "Bool"] {
            assert!(v.contains(n), "{n}");
        }
        for n in ["true", "false", "undef"] {
            assert_eq!(v.get(n).unwrap().arity, 0);
        }
        assert!(v.get("=").unwrap().is_predicate);
        assert!(v.get("Bool").unwrap().is_predicate);
    }

    #[test]
    fn merge_rejects_arity_conflicts() {
        let mut a = Vocabulary::new();
        a.insert(FunctionSymbol::dynamic("f", 1));
        let mut b = Vocabulary::new();
        b.insert(FunctionSymbol::dynamic("f", 2));
        assert_eq!(a.merge(&b).unwrap_err().as_ref(), "f");
    }

    #[test]
    fn merge_ors_flags() {
        let mut a = Vocabulary::new();
        a.insert(FunctionSymbol::dynamic("Get", 0));
        let mut b = Vocabulary::new();
        b.insert(FunctionSymbol::constant("Get", 0));
        a.merge(&b).unwrap();
        assert!(a.get("Get").unwrap().is_static);
    }
}
