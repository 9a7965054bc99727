//! States: interpretations of a vocabulary over a superuniverse.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::EvalError;
use crate::value::{name, ElementKind, Name, Value};
use crate::vocab::{FunctionSymbol, Vocabulary};

/// A function symbol paired with an argument tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub symbol: Name,
    pub args: Vec<Value>,
}

impl Location {
    pub fn new(symbol: &str, args: Vec<Value>) -> Self {
        Location {
            symbol: name(symbol),
            args,
        }
    }

    pub fn nullary(symbol: &str) -> Self {
        Self::new(symbol, Vec::new())
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A named finite universe; enumeration order is declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Universe {
    pub name: Name,
    /// Tag of named elements; `None` for integer universes.
    pub kind: Option<ElementKind>,
    pub elements: Vec<Value>,
}

impl Universe {
    pub fn new(n: &str, kind: Option<ElementKind>, elements: Vec<Value>) -> Self {
        Universe {
            name: name(n),
            kind,
            elements,
        }
    }

    /// Integers `0..n`.
    pub fn range(n: &str, len: i64) -> Self {
        Self::new(n, None, (0..len).map(Value::Int).collect())
    }

    pub fn named(n: &str, kind: ElementKind, elements: &[&str]) -> Self {
        Self::new(
            n,
            Some(kind),
            elements.iter().map(|e| Value::element(kind, e)).collect(),
        )
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.elements.contains(v)
    }
}

type Table = BTreeMap<Vec<Value>, Value>;

/// An interpretation of a vocabulary. Locations not stored hold the default
/// value: `false` for predicates, `undef` otherwise. Default values are never
/// stored, so structural equality is semantic equality.
#[derive(Clone, Debug)]
pub struct State {
    vocab: Arc<Vocabulary>,
    universes: Arc<Vec<Universe>>,
    interp: BTreeMap<Name, Table>,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.interp == other.interp
            && (Arc::ptr_eq(&self.universes, &other.universes)
                || self.universes == other.universes)
    }
}

impl Eq for State {}

impl Hash for State {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.interp.hash(state);
    }
}

impl State {
    pub fn new(vocab: Vocabulary, universes: Vec<Universe>) -> Self {
        State {
            vocab: Arc::new(vocab),
            universes: Arc::new(universes),
            interp: BTreeMap::new(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn universes(&self) -> &[Universe] {
        &self.universes
    }

    pub fn universe(&self, n: &str) -> Option<&Universe> {
        self.universes.iter().find(|u| u.name.as_ref() == n)
    }

    /// Adds a symbol to the vocabulary of this state.
    pub fn declare(&mut self, sym: FunctionSymbol) {
        Arc::make_mut(&mut self.vocab).insert(sym);
    }

    pub fn add_universe(&mut self, u: Universe) {
        let us = Arc::make_mut(&mut self.universes);
        us.retain(|x| x.name != u.name);
        let named: Vec<Value> = u
            .elements
            .iter()
            .filter(|v| v.element_name().is_some())
            .cloned()
            .collect();
        us.push(u);
        for v in named {
            self.name_element(v);
        }
    }

    fn name_element(&mut self, v: Value) {
        let Some((_, n)) = v.element_name() else { return };
        let n = name(n);
        self.declare(FunctionSymbol::constant(&n, 0));
        self.interp.entry(n).or_default().insert(Vec::new(), v);
    }

    /// Declares every named universe element as a static nullary symbol
    /// denoting itself, so programs can mention `Get` or `d0` by name.
    pub fn name_elements(&mut self) {
        let named: Vec<Value> = self
            .universes
            .iter()
            .flat_map(|u| u.elements.iter())
            .filter(|v| v.element_name().is_some())
            .cloned()
            .collect();
        for v in named {
            self.name_element(v);
        }
    }

    /// Finds a named element of any declared universe.
    pub fn element(&self, n: &str) -> Option<&Value> {
        self.universes
            .iter()
            .flat_map(|u| u.elements.iter())
            .find(|v| v.element_name().is_some_and(|(_, en)| en == n))
    }

    pub fn default_for(&self, symbol: &str) -> Value {
        match self.vocab.get(symbol) {
            Some(s) if s.is_predicate => Value::FALSE,
            _ => Value::Undef,
        }
    }

    /// Reads a location. Never mutates the state.
    pub fn read(&self, symbol: &str, args: &[Value]) -> Value {
        match (symbol, args) {
            ("true", []) => return Value::TRUE,
            ("false", []) => return Value::FALSE,
            ("undef", []) => return Value::Undef,
            ("Bool", [v]) => return Value::Bool(matches!(v, Value::Bool(_))),
            _ => {}
        }
        self.interp
            .get(symbol)
            .and_then(|t| t.get(args))
            .cloned()
            .unwrap_or_else(|| self.default_for(symbol))
    }

    pub fn content(&self, loc: &Location) -> Value {
        self.read(&loc.symbol, &loc.args)
    }

    /// Checks that `symbol` exists with the given arity.
    pub fn check_symbol(&self, symbol: &str, arity: usize) -> Result<&FunctionSymbol, EvalError> {
        let sym = self
            .vocab
            .get(symbol)
            .ok_or_else(|| EvalError::UnknownSymbol(name(symbol)))?;
        if sym.arity != arity {
            return Err(EvalError::ArityMismatch {
                symbol: sym.name.clone(),
                expected: sym.arity,
                found: arity,
            });
        }
        Ok(sym)
    }

    /// Sets a location, bypassing the static-symbol guard. Used to build
    /// initial states; rule firing goes through [`crate::fire`].
    pub fn set(&mut self, symbol: &str, args: Vec<Value>, value: Value) -> Result<(), EvalError> {
        let sym = self.check_symbol(symbol, args.len())?;
        if sym.is_logic() {
            return Err(EvalError::StaticUpdate(sym.name.clone()));
        }
        let key = sym.name.clone();
        self.write(key, args, value);
        Ok(())
    }

    pub(crate) fn write(&mut self, symbol: Name, args: Vec<Value>, value: Value) {
        if value == self.default_for(&symbol) {
            if let Some(t) = self.interp.get_mut(&symbol) {
                t.remove(&args);
                if t.is_empty() {
                    self.interp.remove(&symbol);
                }
            }
        } else {
            self.interp.entry(symbol).or_default().insert(args, value);
        }
    }

    pub(crate) fn write_location(&mut self, loc: &Location, value: Value) {
        self.write(loc.symbol.clone(), loc.args.clone(), value);
    }

    /// All stored (non-default) locations, sorted by symbol then arguments.
    pub fn bindings(&self) -> impl Iterator<Item = (Location, &Value)> {
        self.interp.iter().flat_map(|(s, t)| {
            t.iter().map(move |(args, v)| {
                (
                    Location {
                        symbol: s.clone(),
                        args: args.clone(),
                    },
                    v,
                )
            })
        })
    }

    /// Stored entries of one symbol.
    pub fn table<Q>(&self, symbol: &Q) -> impl Iterator<Item = (&[Value], &Value)>
    where
        Name: Borrow<Q>,
        Q: Ord + ?Sized,
    {
        self.interp
            .get(symbol)
            .into_iter()
            .flat_map(|t| t.iter().map(|(a, v)| (a.as_slice(), v)))
    }

    /// Whether two states interpret `symbol` identically.
    pub fn agrees_on(&self, other: &State, symbol: &str) -> bool {
        self.interp.get(symbol) == other.interp.get(symbol)
    }

    /// Reduct to the given symbols and the logic symbols.
    pub fn reduct<'a>(&self, symbols: impl IntoIterator<Item = &'a str>) -> State {
        let keep: std::collections::BTreeSet<&str> = symbols.into_iter().collect();
        let mut vocab = Vocabulary::new();
        for s in self.vocab.iter().filter(|s| keep.contains(s.name.as_ref())) {
            vocab.insert(s.clone());
        }
        State {
            vocab: Arc::new(vocab),
            universes: self.universes.clone(),
            interp: self
                .interp
                .iter()
                .filter(|(k, _)| keep.contains(k.as_ref()))
                .map(|(k, t)| (k.clone(), t.clone()))
                .collect(),
        }
    }

    /// Canonical one-line encoding of the dynamic part of the state:
    /// `sym(args)=value` sorted by symbol then arguments, joined by `; `.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (loc, v) in self.bindings() {
            if self.vocab.get(&loc.symbol).is_some_and(|s| s.is_static) {
                continue;
            }
            if !out.is_empty() {
                out.push_str("; ");
            }
            out.push_str(&format!("{loc}={v}"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> State {
        let mut v = Vocabulary::new();
        v.insert(FunctionSymbol::dynamic("Token1", 0));
        v.insert(FunctionSymbol::constant("Next", 1));
        v.insert(FunctionSymbol::predicate("Colored", 1));
        let mut s = State::new(
            v,
            vec![Universe::named("Nodes", ElementKind::Opaque, &["n1", "n2", "n3"])],
        );
        s.name_elements();
        s
    }

    #[test]
    fn off_domain_reads_default() {
        let s = ring();
        assert_eq!(s.read("Token1", &[]), Value::Undef);
        assert_eq!(s.read("Colored", &[Value::opaque("n1")]), Value::FALSE);
        assert_eq!(s.read("n2", &[]), Value::opaque("n2"));
    }

    #[test]
    fn default_writes_are_not_stored() {
        let mut a = ring();
        let b = a.clone();
        a.set("Token1", vec![], Value::opaque("n1")).unwrap();
        assert_ne!(a, b);
        a.set("Token1", vec![], Value::Undef).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn set_checks_arity() {
        let mut s = ring();
        assert!(matches!(
            s.set("Next", vec![], Value::Undef),
            Err(EvalError::ArityMismatch { .. })
        ));
        assert!(matches!(
            s.set("Nope", vec![], Value::Undef),
            Err(EvalError::UnknownSymbol(_))
        ));
    }
}
