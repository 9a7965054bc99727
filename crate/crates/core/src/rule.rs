//! Transition rules, update sets and firing.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::EvalError;
use crate::state::{Location, State};
use crate::term::{eval_term, Env, Interpretation, Term};
use crate::value::{name, Name, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Update {
        symbol: Name,
        args: Vec<Term>,
        value: Term,
    },
    Block(Vec<Rule>),
    If {
        guard: Term,
        then: Box<Rule>,
        otherwise: Option<Box<Rule>>,
    },
    /// `var x ranges over U`: all instances fire simultaneously.
    Var {
        var: Name,
        universe: Name,
        body: Box<Rule>,
    },
    /// `choose x in U`: one instance, picked by a [`Choice`].
    Choose {
        var: Name,
        universe: Name,
        body: Box<Rule>,
    },
}

impl Rule {
    pub fn update(symbol: &str, args: Vec<Term>, value: Term) -> Rule {
        Rule::Update {
            symbol: name(symbol),
            args,
            value,
        }
    }

    pub fn assign(symbol: &str, value: Term) -> Rule {
        Self::update(symbol, Vec::new(), value)
    }

    pub fn block(rules: Vec<Rule>) -> Rule {
        Rule::Block(rules)
    }

    pub fn when(guard: Term, then: Rule) -> Rule {
        Rule::If {
            guard,
            then: Box::new(then),
            otherwise: None,
        }
    }

    pub fn when_else(guard: Term, then: Rule, otherwise: Rule) -> Rule {
        Rule::If {
            guard,
            then: Box::new(then),
            otherwise: Some(Box::new(otherwise)),
        }
    }

    pub fn for_all(var: &str, universe: &str, body: Rule) -> Rule {
        Rule::Var {
            var: name(var),
            universe: name(universe),
            body: Box::new(body),
        }
    }

    pub fn choose(var: &str, universe: &str, body: Rule) -> Rule {
        Rule::Choose {
            var: name(var),
            universe: name(universe),
            body: Box::new(body),
        }
    }

    /// Every function symbol mentioned by the rule, including update targets.
    pub fn collect_symbols(&self, out: &mut BTreeSet<Name>) {
        self.visit_applications(&mut |s, _| {
            out.insert(s.clone());
        });
    }

    /// Calls `f` with the symbol and argument count of every application,
    /// update targets included.
    pub fn visit_applications(&self, f: &mut dyn FnMut(&Name, usize)) {
        match self {
            Rule::Update {
                symbol,
                args,
                value,
            } => {
                f(symbol, args.len());
                for a in args {
                    a.visit_applications(f);
                }
                value.visit_applications(f);
            }
            Rule::Block(rs) => rs.iter().for_each(|r| r.visit_applications(f)),
            Rule::If {
                guard,
                then,
                otherwise,
            } => {
                guard.visit_applications(f);
                then.visit_applications(f);
                if let Some(o) = otherwise {
                    o.visit_applications(f);
                }
            }
            Rule::Var { body, .. } | Rule::Choose { body, .. } => body.visit_applications(f),
        }
    }

    /// Universes of the choose nodes, in pre-order. The position of a choose
    /// node in this list is its position in a [`Choice`].
    pub fn choose_universes(&self) -> Result<Vec<Name>, EvalError> {
        fn walk(r: &Rule, under_var: bool, out: &mut Vec<Name>) -> Result<(), EvalError> {
            match r {
                Rule::Update { .. } => Ok(()),
                Rule::Block(rs) => rs.iter().try_for_each(|r| walk(r, under_var, out)),
                Rule::If {
                    then, otherwise, ..
                } => {
                    walk(then, under_var, out)?;
                    if let Some(o) = otherwise {
                        walk(o, under_var, out)?;
                    }
                    Ok(())
                }
                Rule::Var { body, .. } => walk(body, true, out),
                Rule::Choose { universe, body, .. } => {
                    if under_var {
                        return Err(EvalError::NestedChoice);
                    }
                    out.push(universe.clone());
                    walk(body, under_var, out)
                }
            }
        }
        let mut out = Vec::new();
        walk(self, false, &mut out)?;
        Ok(out)
    }

    pub fn count_chooses(&self) -> usize {
        match self {
            Rule::Update { .. } => 0,
            Rule::Block(rs) => rs.iter().map(Rule::count_chooses).sum(),
            Rule::If {
                then, otherwise, ..
            } => then.count_chooses() + otherwise.as_ref().map_or(0, |o| o.count_chooses()),
            Rule::Var { body, .. } => body.count_chooses(),
            Rule::Choose { body, .. } => 1 + body.count_chooses(),
        }
    }

    /// Replaces free occurrences of `var` by a literal. Bound occurrences are
    /// left alone.
    pub fn substitute(&self, var: &str, v: &Value) -> Rule {
        match self {
            Rule::Update {
                symbol,
                args,
                value,
            } => Rule::Update {
                symbol: symbol.clone(),
                args: args.iter().map(|a| a.substitute(var, v)).collect(),
                value: value.substitute(var, v),
            },
            Rule::Block(rs) => Rule::Block(rs.iter().map(|r| r.substitute(var, v)).collect()),
            Rule::If {
                guard,
                then,
                otherwise,
            } => Rule::If {
                guard: guard.substitute(var, v),
                then: Box::new(then.substitute(var, v)),
                otherwise: otherwise.as_ref().map(|o| Box::new(o.substitute(var, v))),
            },
            Rule::Var {
                var: x,
                universe,
                body,
            } if x.as_ref() != var => Rule::Var {
                var: x.clone(),
                universe: universe.clone(),
                body: Box::new(body.substitute(var, v)),
            },
            Rule::Choose {
                var: x,
                universe,
                body,
            } if x.as_ref() != var => Rule::Choose {
                var: x.clone(),
                universe: universe.clone(),
                body: Box::new(body.substitute(var, v)),
            },
            Rule::Var { .. } | Rule::Choose { .. } => self.clone(),
        }
    }

    /// Replaces choose nodes by their bodies instantiated per `choice`.
    fn resolve(&self, choice: &[Value], next: &mut usize) -> Rule {
        match self {
            Rule::Update { .. } => self.clone(),
            Rule::Block(rs) => Rule::Block(rs.iter().map(|r| r.resolve(choice, next)).collect()),
            Rule::If {
                guard,
                then,
                otherwise,
            } => Rule::If {
                guard: guard.clone(),
                then: Box::new(then.resolve(choice, next)),
                otherwise: otherwise.as_ref().map(|o| Box::new(o.resolve(choice, next))),
            },
            Rule::Var {
                var,
                universe,
                body,
            } => Rule::Var {
                var: var.clone(),
                universe: universe.clone(),
                body: Box::new(body.resolve(choice, next)),
            },
            Rule::Choose { var, body, .. } => {
                let v = &choice[*next];
                *next += 1;
                body.resolve(choice, next).substitute(var, v)
            }
        }
    }
}

/// A resolution of every choose node of a rule: one element index per node,
/// in pre-order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct Choice(pub Vec<usize>);

impl Choice {
    pub fn none() -> Self {
        Choice(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Update {
    pub location: Location,
    pub value: Value,
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.location, self.value)
    }
}

/// A finite set of updates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct UpdateSet {
    updates: BTreeSet<Update>,
}

impl UpdateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, location: Location, value: Value) {
        self.updates.insert(Update { location, value });
    }

    pub fn union(&mut self, other: UpdateSet) {
        self.updates.extend(other.updates);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Update> {
        self.updates.iter()
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = &Location> {
        self.updates.iter().map(|u| &u.location)
    }

    /// Whether some update changes the content of its location.
    pub fn is_nontrivial<I: Interpretation + ?Sized>(&self, s: &I) -> bool {
        self.updates
            .iter()
            .any(|u| s.read(&u.location.symbol, &u.location.args) != u.value)
    }
}

impl FromIterator<(Location, Value)> for UpdateSet {
    fn from_iter<T: IntoIterator<Item = (Location, Value)>>(iter: T) -> Self {
        let mut u = UpdateSet::new();
        for (l, v) in iter {
            u.insert(l, v);
        }
        u
    }
}

/// No two updates share a location with different values.
pub fn is_consistent(u: &UpdateSet) -> bool {
    // Set order is by location then value, so conflicts are adjacent.
    let mut prev: Option<&Update> = None;
    for up in u.iter() {
        if let Some(p) = prev {
            if p.location == up.location && p.value != up.value {
                return false;
            }
        }
        prev = Some(up);
    }
    true
}

fn eval_update_set<I: Interpretation + ?Sized>(
    r: &Rule,
    s: &I,
    env: &mut Env,
    choice: Option<&[usize]>,
    next: &mut usize,
    out: &mut UpdateSet,
) -> Result<(), EvalError> {
    match r {
        Rule::Update {
            symbol,
            args,
            value,
        } => {
            let sym = s
                .symbol(symbol)
                .ok_or_else(|| EvalError::UnknownSymbol(symbol.clone()))?;
            if sym.arity != args.len() {
                return Err(EvalError::ArityMismatch {
                    symbol: symbol.clone(),
                    expected: sym.arity,
                    found: args.len(),
                });
            }
            let args = args
                .iter()
                .map(|a| eval_term(a, s, env))
                .collect::<Result<Vec<_>, _>>()?;
            let v = eval_term(value, s, env)?;
            out.insert(
                Location {
                    symbol: symbol.clone(),
                    args,
                },
                v,
            );
            Ok(())
        }
        Rule::Block(rs) => {
            for r in rs {
                eval_update_set(r, s, env, choice, next, out)?;
            }
            Ok(())
        }
        Rule::If {
            guard,
            then,
            otherwise,
        } => {
            let g = eval_term(guard, s, env)?;
            let g = g.as_bool().ok_or_else(|| {
                EvalError::Type(format!("guard `{guard}` evaluated to {} `{g}`", g.tag()))
            })?;
            if g {
                eval_update_set(then, s, env, choice, next, out)?;
                if let Some(o) = otherwise {
                    *next += o.count_chooses();
                }
            } else {
                *next += then.count_chooses();
                if let Some(o) = otherwise {
                    eval_update_set(o, s, env, choice, next, out)?;
                }
            }
            Ok(())
        }
        Rule::Var {
            var,
            universe,
            body,
        } => {
            let u = s
                .universe(universe)
                .ok_or_else(|| EvalError::UnknownUniverse(universe.clone()))?;
            let start = *next;
            for e in u.elements.clone() {
                *next = start;
                env.bind(var.clone(), e);
                let res = eval_update_set(body, s, env, choice, next, out);
                env.unbind();
                res?;
            }
            *next = start + body.count_chooses();
            Ok(())
        }
        Rule::Choose {
            var,
            universe,
            body,
        } => {
            let Some(choice) = choice else {
                return Err(EvalError::UnresolvedChoice(universe.clone()));
            };
            let idx = *choice.get(*next).ok_or_else(|| {
                EvalError::BadChoice(format!("no index for choose node {}", *next))
            })?;
            *next += 1;
            let u = s
                .universe(universe)
                .ok_or_else(|| EvalError::UnknownUniverse(universe.clone()))?;
            let e = u.elements.get(idx).cloned().ok_or_else(|| {
                EvalError::BadChoice(format!("index {idx} outside universe `{universe}`"))
            })?;
            env.bind(var.clone(), e);
            let res = eval_update_set(body, s, env, Some(choice), next, out);
            env.unbind();
            res
        }
    }
}

/// The update set of a choose-free rule.
pub fn update_set<I: Interpretation + ?Sized>(
    r: &Rule,
    s: &I,
    env: &Env,
) -> Result<UpdateSet, EvalError> {
    let mut out = UpdateSet::new();
    eval_update_set(r, s, &mut env.clone(), None, &mut 0, &mut out)?;
    Ok(out)
}

/// The update set of a rule with its choose nodes resolved by `choice`.
pub fn update_set_with<I: Interpretation + ?Sized>(
    r: &Rule,
    s: &I,
    env: &Env,
    choice: &Choice,
) -> Result<UpdateSet, EvalError> {
    let mut out = UpdateSet::new();
    let mut next = 0;
    eval_update_set(r, s, &mut env.clone(), Some(&choice.0), &mut next, &mut out)?;
    Ok(out)
}

/// All choice resolutions of `r`, in universe enumeration order
/// (lexicographic over choose nodes in pre-order).
pub fn choices<I: Interpretation + ?Sized>(r: &Rule, s: &I) -> Result<Vec<Choice>, EvalError> {
    let us = r.choose_universes()?;
    let mut sizes = Vec::with_capacity(us.len());
    for u in &us {
        let uni = s
            .universe(u)
            .ok_or_else(|| EvalError::UnknownUniverse(u.clone()))?;
        sizes.push(uni.elements.len());
    }
    let mut out = vec![Choice::none()];
    for size in sizes {
        out = out
            .into_iter()
            .flat_map(|c| {
                (0..size).map(move |i| {
                    let mut c = c.clone();
                    c.0.push(i);
                    c
                })
            })
            .collect();
    }
    Ok(out)
}

/// One resolved, choose-free rule instance per choice resolution.
pub fn enumerate_choices<I: Interpretation + ?Sized>(
    r: &Rule,
    s: &I,
) -> Result<Vec<(Choice, Rule)>, EvalError> {
    let us = r.choose_universes()?;
    let mut elements = Vec::with_capacity(us.len());
    for u in &us {
        let uni = s
            .universe(u)
            .ok_or_else(|| EvalError::UnknownUniverse(u.clone()))?;
        elements.push(uni.elements.clone());
    }
    choices(r, s)?
        .into_iter()
        .map(|c| {
            let vals: Vec<Value> = c
                .0
                .iter()
                .zip(&elements)
                .map(|(i, es)| es[*i].clone())
                .collect();
            let resolved = r.resolve(&vals, &mut 0);
            Ok((c, resolved))
        })
        .collect()
}

/// Outcome of firing an update set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fired {
    pub state: State,
    /// `false` when the update set was inconsistent and nothing was changed.
    pub consistent: bool,
}

/// Fires `u` at `s`. Inconsistent sets leave the state unchanged.
pub fn fire(s: &State, u: &UpdateSet) -> Result<Fired, EvalError> {
    for loc in u.locations() {
        let sym = s.check_symbol(&loc.symbol, loc.args.len())?;
        if sym.is_static {
            return Err(EvalError::StaticUpdate(sym.name.clone()));
        }
    }
    if !is_consistent(u) {
        return Ok(Fired {
            state: s.clone(),
            consistent: false,
        });
    }
    let mut next = s.clone();
    for up in u.iter() {
        next.write_location(&up.location, up.value.clone());
    }
    Ok(Fired {
        state: next,
        consistent: true,
    })
}

/// A rule is enabled when its update set is consistent and contains a
/// non-trivial update.
pub fn is_enabled<I: Interpretation + ?Sized>(r: &Rule, s: &I) -> Result<bool, EvalError> {
    let u = update_set(r, s, &Env::new())?;
    Ok(is_consistent(&u) && u.is_nontrivial(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Universe;
    use crate::value::ElementKind;
    use crate::vocab::{FunctionSymbol, Vocabulary};

    fn n(x: &str) -> Value {
        Value::opaque(x)
    }

    fn ring() -> State {
        let mut v = Vocabulary::new();
        for s in ["Token1", "Token2", "p", "InputDatum"] {
            v.insert(FunctionSymbol::dynamic(s, 0));
        }
        v.insert(FunctionSymbol::constant("Next", 1));
        v.insert(FunctionSymbol::predicate("Colored", 1));
        let mut s = State::new(
            v,
            vec![
                Universe::named("Nodes", ElementKind::Opaque, &["n1", "n2", "n3"]),
                Universe::named("Data", ElementKind::Datum, &["d0", "d1"]),
                Universe::new("Empty", None, vec![]),
            ],
        );
        s.name_elements();
        s.set("Token1", vec![], n("n1")).unwrap();
        s.set("Token2", vec![], n("n2")).unwrap();
        s.set("p", vec![], Value::Int(0)).unwrap();
        s
    }

    #[test]
    fn block_exchanges_tokens() {
        let s = ring();
        let r = Rule::block(vec![
            Rule::assign("Token1", Term::sym("Token2")),
            Rule::assign("Token2", Term::sym("Token1")),
        ]);
        let u = update_set(&r, &s, &Env::new()).unwrap();
        let expect: UpdateSet = [
            (Location::nullary("Token1"), n("n2")),
            (Location::nullary("Token2"), n("n1")),
        ]
        .into_iter()
        .collect();
        assert_eq!(u, expect);
    }

    #[test]
    fn false_guard_gives_empty_set() {
        let s = ring();
        let r = Rule::when(Term::sym("false"), Rule::assign("p", Term::int(1)));
        assert!(update_set(&r, &s, &Env::new()).unwrap().is_empty());
    }

    #[test]
    fn else_branch() {
        let s = ring();
        let r = Rule::when_else(
            Term::sym("false"),
            Rule::assign("p", Term::int(1)),
            Rule::assign("p", Term::int(2)),
        );
        let u = update_set(&r, &s, &Env::new()).unwrap();
        assert_eq!(u.iter().next().unwrap().value, Value::Int(2));
    }

    #[test]
    fn var_rule_colors_unoccupied_nodes() {
        let s = ring();
        let r = Rule::for_all(
            "x",
            "Nodes",
            Rule::when(
                Term::and(
                    Term::ne(Term::var("x"), Term::sym("Token1")),
                    Term::ne(Term::var("x"), Term::sym("Token2")),
                ),
                Rule::update("Colored", vec![Term::var("x")], Term::sym("true")),
            ),
        );
        let u = update_set(&r, &s, &Env::new()).unwrap();
        let expect: UpdateSet = [(Location::new("Colored", vec![n("n3")]), Value::TRUE)]
            .into_iter()
            .collect();
        assert_eq!(u, expect);
    }

    #[test]
    fn guard_must_be_boolean() {
        let s = ring();
        let r = Rule::when(Term::sym("p"), Rule::assign("p", Term::int(1)));
        assert!(matches!(update_set(&r, &s, &Env::new()), Err(EvalError::Type(_))));
    }

    #[test]
    fn choose_without_resolution_is_contract_error() {
        let s = ring();
        let r = Rule::choose("v", "Data", Rule::assign("InputDatum", Term::var("v")));
        assert_eq!(
            update_set(&r, &s, &Env::new()),
            Err(EvalError::UnresolvedChoice(name("Data")))
        );
    }

    #[test]
    fn choose_enumeration() {
        let s = ring();
        let r = Rule::choose("v", "Data", Rule::assign("InputDatum", Term::var("v")));
        let cs = enumerate_choices(&r, &s).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].1, Rule::assign("InputDatum", Term::Lit(Value::datum("d0"))));
        assert_eq!(cs[1].1, Rule::assign("InputDatum", Term::Lit(Value::datum("d1"))));
        for (c, inst) in &cs {
            assert_eq!(
                update_set(inst, &s, &Env::new()).unwrap(),
                update_set_with(&r, &s, &Env::new(), c).unwrap()
            );
        }
        let empty = Rule::choose("v", "Empty", Rule::assign("p", Term::var("v")));
        assert!(enumerate_choices(&empty, &s).unwrap().is_empty());
    }

    #[test]
    fn choose_under_var_is_rejected() {
        let s = ring();
        let r = Rule::for_all(
            "x",
            "Nodes",
            Rule::choose("v", "Data", Rule::assign("InputDatum", Term::var("v"))),
        );
        assert_eq!(enumerate_choices(&r, &s), Err(EvalError::NestedChoice));
    }

    #[test]
    fn consistency() {
        let a = n("n1");
        let b = n("n2");
        let bad: UpdateSet = [
            (Location::nullary("Token1"), a.clone()),
            (Location::nullary("Token1"), b),
        ]
        .into_iter()
        .collect();
        assert!(!is_consistent(&bad));
        let dup: UpdateSet = [
            (Location::nullary("Token1"), a.clone()),
            (Location::nullary("Token1"), a),
        ]
        .into_iter()
        .collect();
        assert!(is_consistent(&dup));
        assert!(is_consistent(&UpdateSet::new()));
    }

    #[test]
    fn firing() {
        let s = ring();
        assert_eq!(fire(&s, &UpdateSet::new()).unwrap().state, s);

        let u: UpdateSet = [(Location::nullary("Token1"), n("n2"))].into_iter().collect();
        let t = fire(&s, &u).unwrap();
        assert!(t.consistent);
        assert_eq!(t.state.read("Token1", &[]), n("n2"));
        assert_eq!(t.state.read("Token2", &[]), s.read("Token2", &[]));

        let conflict: UpdateSet = [
            (Location::nullary("p"), Value::Int(1)),
            (Location::nullary("p"), Value::Int(2)),
        ]
        .into_iter()
        .collect();
        let t = fire(&s, &conflict).unwrap();
        assert!(!t.consistent);
        assert_eq!(t.state, s);
    }

    #[test]
    fn static_update_rejected() {
        let s = ring();
        let u: UpdateSet = [(Location::new("Next", vec![n("n1")]), n("n1"))]
            .into_iter()
            .collect();
        assert_eq!(fire(&s, &u), Err(EvalError::StaticUpdate(name("Next"))));
    }

    #[test]
    fn enabledness_needs_nontrivial_update() {
        let s = ring();
        assert!(!is_enabled(&Rule::assign("p", Term::sym("p")), &s).unwrap());
        assert!(is_enabled(&Rule::assign("p", Term::int(3)), &s).unwrap());
        let conflict = Rule::block(vec![
            Rule::assign("p", Term::int(1)),
            Rule::assign("p", Term::int(2)),
        ]);
        assert!(!is_enabled(&conflict, &s).unwrap());
    }
}
