//! Distributed programs: modules, agents, views and single moves.

mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::error::EvalError;
use crate::rule::{choices, fire, is_consistent, update_set_with, Choice, Rule, UpdateSet};
use crate::state::{Location, State, Universe};
use crate::term::{Env, Interpretation, Term};
use crate::value::{name, Name, Value};
use crate::vocab::{FunctionSymbol, Vocabulary, AGENTS, ME, MOD};

pub use run::{state_at_move, validate_run, Move, MoveSet, Run, RunCondition, RunVerdict};

/// The global state of a distributed program. `Me` is never bound here;
/// agents see it through their [`AgentView`].
pub type GlobalState = State;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("agent {0} has no module")]
    NoModule(Value),
    #[error("agent {agent} is not enabled under choice {choice}")]
    NotEnabled { agent: Value, choice: Choice },
    #[error("`{0}` is external and may only be changed by the environment")]
    ExternalUpdate(Name),
    #[error("environment assignment to non-external `{0}`")]
    NotExternal(Name),
    #[error("duplicate module name `{0}`")]
    DuplicateModule(Name),
    #[error("`{0}` cannot be used as a module name")]
    ReservedModuleName(Name),
    #[error("vocabulary conflict on `{0}`")]
    VocabularyConflict(Name),
    #[error("program has no universe `Agents`")]
    NoAgents,
    #[error("unknown move {0}")]
    UnknownMove(usize),
    #[error("environment sets `{symbol}` to {value}, outside universe `{universe}`")]
    Mistyped {
        symbol: Name,
        value: Value,
        universe: Name,
    },
}

/// One (optionally named) alternative of a module.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NamedRule {
    pub name: Option<Name>,
    pub rule: Rule,
}

impl NamedRule {
    pub fn anonymous(rule: Rule) -> Self {
        NamedRule { name: None, rule }
    }

    pub fn named(n: &str, rule: Rule) -> Self {
        NamedRule {
            name: Some(name(n)),
            rule,
        }
    }
}

/// A named program whose rules all fire together. Several named rules act as
/// one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EAModule {
    name: Name,
    rules: Vec<NamedRule>,
    rule: Rule,
    symbols: BTreeSet<Name>,
}

impl EAModule {
    pub fn new(n: &str, rules: Vec<NamedRule>) -> Self {
        let rule = match rules.as_slice() {
            [one] => one.rule.clone(),
            _ => Rule::Block(rules.iter().map(|r| r.rule.clone()).collect()),
        };
        let mut symbols = BTreeSet::new();
        rule.collect_symbols(&mut symbols);
        EAModule {
            name: name(n),
            rules,
            rule,
            symbols,
        }
    }

    pub fn single(n: &str, rule: Rule) -> Self {
        Self::new(n, vec![NamedRule::anonymous(rule)])
    }

    pub fn name(&self) -> &Name {
        &self.name
    }

    pub fn rules(&self) -> &[NamedRule] {
        &self.rules
    }

    /// The module as a single rule.
    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Function symbols mentioned by the module.
    pub fn symbols(&self) -> &BTreeSet<Name> {
        &self.symbols
    }

    /// Splits a choice for the whole module into one choice per named rule.
    pub fn split_choice(&self, c: &Choice) -> Vec<Choice> {
        let mut at = 0;
        self.rules
            .iter()
            .map(|r| {
                let k = r.rule.count_chooses().min(c.0.len().saturating_sub(at));
                let part = Choice(c.0[at..at + k].to_vec());
                at += k;
                part
            })
            .collect()
    }
}

/// A term abbreviation, kept so programs can be rendered the way they were
/// written. Rules always hold the expanded form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abbreviation {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: Term,
}

impl Abbreviation {
    pub fn expand(&self, args: &[Term]) -> Term {
        let subst: Vec<(Name, Term)> = self
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        self.body.substitute_terms(&subst)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributedProgram {
    vocabulary: Vocabulary,
    modules: Vec<EAModule>,
    environment: Vec<EAModule>,
    typing: BTreeMap<Name, Name>,
    abbreviations: Vec<Abbreviation>,
    universes: Vec<Universe>,
}

impl DistributedProgram {
    /// Builds a program. The vocabulary is extended with `Mod`, `Me`, the
    /// module names and every symbol the rules mention; symbols not declared
    /// beforehand become dynamic functions.
    pub fn new(mut vocabulary: Vocabulary, modules: Vec<EAModule>) -> Result<Self, DistError> {
        vocabulary
            .merge(&Vocabulary::distributed())
            .map_err(DistError::VocabularyConflict)?;
        let mut seen = BTreeSet::new();
        for m in &modules {
            if m.name.as_ref() == ME || m.name.as_ref() == MOD {
                return Err(DistError::ReservedModuleName(m.name.clone()));
            }
            if !seen.insert(m.name.clone()) {
                return Err(DistError::DuplicateModule(m.name.clone()));
            }
            vocabulary.insert(FunctionSymbol::constant(&m.name, 0));
        }
        let mut p = DistributedProgram {
            vocabulary,
            modules,
            environment: Vec::new(),
            typing: BTreeMap::new(),
            abbreviations: Vec::new(),
            universes: Vec::new(),
        };
        p.declare_mentioned();
        Ok(p)
    }

    fn declare_mentioned(&mut self) {
        let mut used: BTreeMap<Name, usize> = BTreeMap::new();
        for m in self.modules.iter().chain(&self.environment) {
            m.rule.visit_applications(&mut |s, arity| {
                used.entry(s.clone()).or_insert(arity);
            });
        }
        for (s, arity) in used {
            if !self.vocabulary.contains(&s) {
                self.vocabulary.insert(FunctionSymbol::dynamic(&s, arity));
            }
        }
    }

    /// Adds rules describing what the environment may do to external functions.
    pub fn with_environment(mut self, env: Vec<EAModule>) -> Self {
        self.environment = env;
        self.declare_mentioned();
        self
    }

    /// Declares the universe an external (or any) function ranges over.
    pub fn with_typing(mut self, symbol: &str, universe: &str) -> Self {
        self.typing.insert(name(symbol), name(universe));
        self
    }

    pub fn with_abbreviations(mut self, abbrevs: Vec<Abbreviation>) -> Self {
        self.abbreviations = abbrevs;
        self
    }

    /// Universes fixed by the program itself, such as a set of modes. Their
    /// elements become static constants of the vocabulary.
    pub fn with_universes(mut self, universes: Vec<Universe>) -> Self {
        for u in &universes {
            for e in &u.elements {
                if let Some((_, n)) = e.element_name() {
                    self.vocabulary.insert(FunctionSymbol::constant(n, 0));
                }
            }
        }
        self.universes = universes;
        self
    }

    pub fn universes(&self) -> &[Universe] {
        &self.universes
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn modules(&self) -> &[EAModule] {
        &self.modules
    }

    pub fn module(&self, n: &str) -> Option<&EAModule> {
        self.modules.iter().find(|m| m.name.as_ref() == n)
    }

    pub fn environment(&self) -> &[EAModule] {
        &self.environment
    }

    pub fn typing(&self) -> &BTreeMap<Name, Name> {
        &self.typing
    }

    pub fn abbreviations(&self) -> &[Abbreviation] {
        &self.abbreviations
    }

    pub fn is_external(&self, symbol: &str) -> bool {
        self.vocabulary.get(symbol).is_some_and(|s| s.is_external)
    }

    pub fn externals(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.vocabulary.externals()
    }

    /// The symbols of the union of all modules.
    pub fn mentioned_symbols(&self) -> BTreeSet<Name> {
        self.modules
            .iter()
            .flat_map(|m| m.symbols.iter().cloned())
            .collect()
    }

    /// An empty state over the program vocabulary with the given universes,
    /// element names declared and the module names interpreted.
    pub fn empty_state(&self, universes: Vec<Universe>) -> GlobalState {
        let mut all = self.universes.clone();
        all.extend(universes);
        let mut s = State::new(self.vocabulary.clone(), all);
        s.name_elements();
        for m in &self.modules {
            s.set(&m.name, vec![], Value::opaque(&m.name))
                .expect("module names are declared");
        }
        s
    }

    /// Assigns an agent to a module, adding it to the `Agents` universe.
    pub fn assign(&self, s: &mut GlobalState, agent: Value, module: &str) {
        let mut agents = s
            .universe(AGENTS)
            .cloned()
            .unwrap_or_else(|| {
                let kind = agent.element_name().map(|(k, _)| k);
                Universe::new(AGENTS, kind, Vec::new())
            });
        if !agents.contains(&agent) {
            agents.elements.push(agent.clone());
            s.add_universe(agents);
        }
        s.set(MOD, vec![agent], Value::opaque(module))
            .expect("Mod is declared");
    }

    /// Module of an agent, per `Mod`.
    pub fn module_of(&self, s: &GlobalState, agent: &Value) -> Option<&EAModule> {
        match s.read(MOD, std::slice::from_ref(agent)) {
            Value::Opaque(m) => self.module(&m),
            _ => None,
        }
    }

    /// Agents of a state in universe order.
    pub fn agents(&self, s: &GlobalState) -> Vec<Value> {
        s.universe(AGENTS)
            .map(|u| {
                u.elements
                    .iter()
                    .filter(|a| self.module_of(s, a).is_some())
                    .cloned()
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// The local state of an agent: the global state restricted to the module's
/// symbols, with `Me` denoting the agent.
pub struct AgentView<'a> {
    state: &'a GlobalState,
    agent: &'a Value,
    module: &'a EAModule,
}

impl<'a> AgentView<'a> {
    pub fn new(state: &'a GlobalState, agent: &'a Value, module: &'a EAModule) -> Self {
        AgentView {
            state,
            agent,
            module,
        }
    }

    fn visible(&self, symbol: &str) -> bool {
        symbol == ME
            || self.module.symbols.contains(symbol)
            || crate::vocab::is_logic_symbol(symbol)
    }
}

impl Interpretation for AgentView<'_> {
    fn read(&self, symbol: &str, args: &[Value]) -> Value {
        if symbol == ME {
            return self.agent.clone();
        }
        if !self.visible(symbol) {
            return self.state.default_for(symbol);
        }
        self.state.read(symbol, args)
    }

    fn symbol(&self, symbol: &str) -> Option<&FunctionSymbol> {
        if self.visible(symbol) {
            self.state.vocabulary().get(symbol)
        } else {
            None
        }
    }

    fn universe(&self, name: &str) -> Option<&Universe> {
        self.state.universe(name)
    }
}

/// Materializes an agent's view as a state of its own.
pub fn view(p: &DistributedProgram, s: &GlobalState, agent: &Value) -> Result<State, DistError> {
    let m = p
        .module_of(s, agent)
        .ok_or_else(|| DistError::NoModule(agent.clone()))?;
    let mut v = s.reduct(m.symbols.iter().map(|n| n.as_ref()));
    v.declare(FunctionSymbol::constant(ME, 0));
    v.set(ME, vec![], agent.clone())?;
    Ok(v)
}

/// Who acted in a move: an agent and, for modules with named rules, the rule
/// whose updates were fired.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Actor {
    pub agent: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Name>,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Some(r) => write!(f, "{}.{}", self.agent, r),
            None => write!(f, "{}", self.agent),
        }
    }
}

/// An enabled way for an agent to move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enabled {
    pub choice: Choice,
    pub actor: Actor,
    pub updates: UpdateSet,
}

/// Update set of an agent's module at the agent's view.
pub fn agent_update_set(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
    choice: &Choice,
) -> Result<UpdateSet, DistError> {
    let m = p
        .module_of(s, agent)
        .ok_or_else(|| DistError::NoModule(agent.clone()))?;
    let v = AgentView::new(s, agent, m);
    Ok(update_set_with(m.rule(), &v, &Env::new(), choice)?)
}

fn actor_for(
    m: &EAModule,
    s: &GlobalState,
    agent: &Value,
    choice: &Choice,
) -> Result<Actor, DistError> {
    let mut rule = None;
    if m.rules.iter().any(|r| r.name.is_some()) {
        let v = AgentView::new(s, agent, m);
        for (r, c) in m.rules.iter().zip(m.split_choice(choice)) {
            if update_set_with(&r.rule, &v, &Env::new(), &c)?.is_nontrivial(&v) {
                rule = r.name.clone();
                break;
            }
        }
    }
    Ok(Actor {
        agent: agent.clone(),
        rule,
    })
}

/// Every choice resolution under which the agent is enabled, with the update
/// set it would fire.
pub fn agent_enabled(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
) -> Result<Vec<Enabled>, DistError> {
    let m = p
        .module_of(s, agent)
        .ok_or_else(|| DistError::NoModule(agent.clone()))?;
    let v = AgentView::new(s, agent, m);
    let mut out = Vec::new();
    for c in choices(m.rule(), &v)? {
        let u = update_set_with(m.rule(), &v, &Env::new(), &c)?;
        if is_consistent(&u) && u.is_nontrivial(&v) {
            let actor = actor_for(m, s, agent, &c)?;
            out.push(Enabled {
                choice: c,
                actor,
                updates: u,
            });
        }
    }
    Ok(out)
}

pub fn is_agent_enabled(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
) -> Result<bool, DistError> {
    Ok(!agent_enabled(p, s, agent)?.is_empty())
}

/// A partial assignment to external functions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EnvDelta(pub BTreeMap<Location, Value>);

impl EnvDelta {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn set(mut self, symbol: &str, args: Vec<Value>, v: Value) -> Self {
        self.0.insert(Location::new(symbol, args), v);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Drops assignments that would not change `s`.
    pub fn relative_to(mut self, s: &State) -> Self {
        self.0.retain(|l, v| s.content(l) != *v);
        self
    }

    pub fn check(&self, p: &DistributedProgram) -> Result<(), DistError> {
        for l in self.0.keys() {
            if !p.is_external(&l.symbol) {
                return Err(DistError::NotExternal(l.symbol.clone()));
            }
        }
        Ok(())
    }

    /// `s` with the assignment applied.
    pub fn apply(&self, p: &DistributedProgram, s: &GlobalState) -> Result<GlobalState, DistError> {
        self.check(p)?;
        let mut t = s.clone();
        for (l, v) in &self.0 {
            t.write_location(l, v.clone());
        }
        Ok(t)
    }
}

impl Serialize for EnvDelta {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = ser.serialize_map(Some(self.0.len()))?;
        for (l, v) in &self.0 {
            m.serialize_entry(&l.to_string(), v)?;
        }
        m.end()
    }
}

impl fmt::Display for EnvDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(l, v)| format!("{l}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Fires an agent's module at its view, in the global state.
fn fire_updates(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
    choice: &Choice,
) -> Result<GlobalState, DistError> {
    let m = p
        .module_of(s, agent)
        .ok_or_else(|| DistError::NoModule(agent.clone()))?;
    let v = AgentView::new(s, agent, m);
    let u = update_set_with(m.rule(), &v, &Env::new(), choice)?;
    if !(is_consistent(&u) && u.is_nontrivial(&v)) {
        return Err(DistError::NotEnabled {
            agent: agent.clone(),
            choice: choice.clone(),
        });
    }
    if let Some(l) = u.locations().find(|l| p.is_external(&l.symbol)) {
        return Err(DistError::ExternalUpdate(l.symbol.clone()));
    }
    Ok(fire(s, &u)?.state)
}

/// Fires an agent and then lets the environment set external functions.
/// External functions not mentioned by `env` keep their values.
pub fn fire_agent(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
    choice: &Choice,
    env: Option<&EnvDelta>,
) -> Result<GlobalState, DistError> {
    let t = fire_updates(p, s, agent, choice)?;
    match env {
        Some(e) => e.apply(p, &t),
        None => Ok(t),
    }
}

/// One move as runs and the explorer use it: the environment acts first, then
/// the agent fires at the resulting state.
pub fn step(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
    choice: &Choice,
    env: &EnvDelta,
) -> Result<GlobalState, DistError> {
    let pre = env.apply(p, s)?;
    fire_updates(p, &pre, agent, choice)
}

/// Locations an agent reads and writes when firing under `choice`.
pub fn footprint(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
    choice: &Choice,
) -> Result<(BTreeSet<Location>, BTreeSet<Location>), DistError> {
    let m = p
        .module_of(s, agent)
        .ok_or_else(|| DistError::NoModule(agent.clone()))?;
    let v = AgentView::new(s, agent, m);
    let rec = crate::term::Recording::new(&v);
    let u = update_set_with(m.rule(), &rec, &Env::new(), choice)?;
    let mut reads = rec.into_reads();
    reads.retain(|l| l.symbol.as_ref() != ME);
    let writes = u.locations().cloned().collect();
    Ok((reads, writes))
}

/// Locations an agent's module may read or write at `s`, evaluating both
/// branches of every conditional and every element of `var` and `choose`
/// ranges.
pub fn potential_footprint(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
) -> Result<(BTreeSet<Location>, BTreeSet<Location>), DistError> {
    fn walk<I: crate::term::Interpretation + ?Sized>(
        r: &Rule,
        s: &I,
        env: &mut Env,
        writes: &mut BTreeSet<Location>,
    ) -> Result<(), EvalError> {
        match r {
            Rule::Update {
                symbol,
                args,
                value,
            } => {
                let args = args
                    .iter()
                    .map(|t| crate::term::eval_term(t, s, env))
                    .collect::<Result<Vec<_>, _>>()?;
                crate::term::eval_term(value, s, env)?;
                writes.insert(Location {
                    symbol: symbol.clone(),
                    args,
                });
            }
            Rule::Block(rs) => {
                for r in rs {
                    walk(r, s, env, writes)?;
                }
            }
            Rule::If {
                guard,
                then,
                otherwise,
            } => {
                crate::term::eval_term(guard, s, env)?;
                walk(then, s, env, writes)?;
                if let Some(o) = otherwise {
                    walk(o, s, env, writes)?;
                }
            }
            Rule::Var {
                var,
                universe,
                body,
            }
            | Rule::Choose {
                var,
                universe,
                body,
            } => {
                let elements = s
                    .universe(universe)
                    .ok_or_else(|| EvalError::UnknownUniverse(universe.clone()))?
                    .elements
                    .clone();
                for v in elements {
                    env.bind(var.clone(), v);
                    let r = walk(body, s, env, writes);
                    env.unbind();
                    r?;
                }
            }
        }
        Ok(())
    }
    let m = p
        .module_of(s, agent)
        .ok_or_else(|| DistError::NoModule(agent.clone()))?;
    let v = AgentView::new(s, agent, m);
    let rec = crate::term::Recording::new(&v);
    let mut writes = BTreeSet::new();
    walk(m.rule(), &rec, &mut Env::new(), &mut writes)?;
    let mut reads = rec.into_reads();
    reads.retain(|l| l.symbol.as_ref() != ME);
    Ok((reads, writes))
}

/// A program together with its initial state.
#[derive(Clone, Debug)]
pub struct Machine {
    pub name: String,
    pub program: std::sync::Arc<DistributedProgram>,
    pub initial: GlobalState,
}

impl Machine {
    pub fn new(name: &str, program: DistributedProgram, initial: GlobalState) -> Self {
        Machine {
            name: name.to_string(),
            program: std::sync::Arc::new(program),
            initial,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringbuffer::{build_cea, build_r1, build_rea, RingParams, BACK_END, FRONT_END};

    fn fe() -> Value {
        Value::agent(FRONT_END)
    }

    fn be() -> Value {
        Value::agent(BACK_END)
    }

    fn int(i: i64) -> Value {
        Value::Int(i)
    }

    #[test]
    fn front_end_view_symbols() {
        let m = build_rea(RingParams::new(4, 2));
        let v = view(&m.program, &m.initial, &fe()).unwrap();
        let user: BTreeSet<&str> = v
            .vocabulary()
            .user_symbols()
            .map(|s| s.name.as_ref())
            .collect();
        for x in ["p", "g", "Buffer", "InSendBit", "InReceiveBit", "InputDatum", "Me"] {
            assert!(user.contains(x), "{x} missing from view");
        }
        for x in ["OutSendBit", "OutReceiveBit", "OutputDatum"] {
            assert!(!user.contains(x), "{x} should not be visible");
        }
        assert_eq!(v.read(ME, &[]), fe());
    }

    #[test]
    fn view_ignores_unmentioned_symbols() {
        let m = build_rea(RingParams::new(4, 2));
        let mut other = m.initial.clone();
        other.set("OutSendBit", vec![], int(1)).unwrap();
        assert_eq!(
            view(&m.program, &m.initial, &fe()).unwrap(),
            view(&m.program, &other, &fe()).unwrap()
        );
        assert_ne!(
            view(&m.program, &m.initial, &be()).unwrap(),
            view(&m.program, &other, &be()).unwrap()
        );
    }

    #[test]
    fn agent_without_module() {
        let m = build_rea(RingParams::new(2, 1));
        let stranger = Value::agent("nobody");
        assert_eq!(
            view(&m.program, &m.initial, &stranger),
            Err(DistError::NoModule(stranger.clone()))
        );
        assert!(agent_enabled(&m.program, &m.initial, &stranger).is_err());
    }

    #[test]
    fn rea_initial_enabledness() {
        let m = build_rea(RingParams::new(4, 2));
        assert!(!is_agent_enabled(&m.program, &m.initial, &be()).unwrap());
        assert!(!is_agent_enabled(&m.program, &m.initial, &fe()).unwrap());
        let mut s = m.initial.clone();
        s.set("InSendBit", vec![], int(1)).unwrap();
        assert!(is_agent_enabled(&m.program, &s, &fe()).unwrap());
        assert!(!is_agent_enabled(&m.program, &s, &be()).unwrap());
    }

    #[test]
    fn r1_input_channel_needs_both_ready() {
        let m = build_r1(RingParams::new(2, 2));
        let ch = Value::agent(crate::ringbuffer::INPUT_CHANNEL);
        assert!(!is_agent_enabled(&m.program, &m.initial, &ch).unwrap());
        let mut s = m.initial.clone();
        s.set("Mode", vec![Value::agent("input_env")], Value::mode("Ready"))
            .unwrap();
        s.set("Mode", vec![fe()], Value::mode("Ready")).unwrap();
        assert!(is_agent_enabled(&m.program, &s, &ch).unwrap());
    }

    #[test]
    fn r1_input_environment_offers_each_datum() {
        let m = build_r1(RingParams::new(2, 2));
        let en = agent_enabled(&m.program, &m.initial, &Value::agent("input_env")).unwrap();
        assert_eq!(en.len(), 2);
        for (i, e) in en.iter().enumerate() {
            let expect: UpdateSet = [
                (Location::nullary("InputDatum"), Value::datum(&format!("d{i}"))),
                (
                    Location::new("Mode", vec![Value::agent("input_env")]),
                    Value::mode("Ready"),
                ),
            ]
            .into_iter()
            .collect();
            assert_eq!(e.updates, expect);
        }
    }

    #[test]
    fn firing_front_end() {
        let m = build_rea(RingParams::new(4, 2));
        let mut s = m.initial.clone();
        s.set("InSendBit", vec![], int(1)).unwrap();
        let t = fire_agent(&m.program, &s, &fe(), &Choice::none(), None).unwrap();
        assert_eq!(t.read("Buffer", &[int(0)]), Value::datum("d0"));
        assert_eq!(t.read("InReceiveBit", &[]), int(1));
        assert_eq!(t.read("p", &[]), int(1));
        assert_eq!(t.read("g", &[]), int(0));

        let env = EnvDelta::none().set("InputDatum", vec![], Value::datum("d1"));
        let t = fire_agent(&m.program, &s, &fe(), &Choice::none(), Some(&env)).unwrap();
        assert_eq!(t.read("InputDatum", &[]), Value::datum("d1"));
        assert_eq!(t.read("Buffer", &[int(0)]), Value::datum("d0"));
    }

    #[test]
    fn firing_disabled_agent_is_contract_error() {
        let m = build_rea(RingParams::new(4, 2));
        assert!(matches!(
            fire_agent(&m.program, &m.initial, &be(), &Choice::none(), None),
            Err(DistError::NotEnabled { .. })
        ));
    }

    #[test]
    fn env_may_only_touch_externals() {
        let m = build_rea(RingParams::new(4, 2));
        let bad = EnvDelta::none().set("p", vec![], int(3));
        assert_eq!(
            bad.apply(&m.program, &m.initial),
            Err(DistError::NotExternal(name("p")))
        );
    }

    #[test]
    fn cea_get() {
        let m = build_cea(RingParams::new(4, 2));
        let mut s = m.initial.clone();
        s.set("InSendBit", vec![], int(1)).unwrap();
        s.set("InputDatum", vec![], Value::datum("d1")).unwrap();
        let en = agent_enabled(&m.program, &s, &int(0)).unwrap();
        assert_eq!(en.len(), 1);
        assert_eq!(en[0].actor.rule.as_deref(), Some("Get"));
        for k in 1..4 {
            assert!(!is_agent_enabled(&m.program, &s, &int(k)).unwrap());
        }
        let t = fire_agent(&m.program, &s, &int(0), &Choice::none(), None).unwrap();
        assert_eq!(t.read("Buffer", &[int(0)]), Value::datum("d1"));
        assert_eq!(t.read("pp", &[int(0)]), int(1));
        assert_eq!(t.read("Mode", &[int(0)]), Value::mode("Put"));
        assert_eq!(t.read("InReceiveBit", &[]), int(1));
    }

    fn input(d: &str) -> EnvDelta {
        EnvDelta::none()
            .set("InSendBit", vec![], int(1))
            .set("InputDatum", vec![], Value::datum(d))
    }

    #[test]
    fn runs() {
        let m = build_rea(RingParams::new(4, 2));
        let p = &m.program;
        assert!(validate_run(p, &Run::empty(m.initial.clone())).is_ok());

        let r = Run::sequential(
            p,
            m.initial.clone(),
            vec![Move::new(fe()).with_env(input("d1")), Move::new(be())],
        )
        .unwrap();
        assert_eq!(validate_run(p, &r), RunVerdict::Ok);
        assert_eq!(r.final_state().read("OutputDatum", &[]), Value::datum("d1"));

        let bad = Run::from_parts(
            vec![Move::new(be())],
            vec![],
            vec![m.initial.clone(), m.initial.clone()],
        );
        match validate_run(p, &bad) {
            RunVerdict::Violated { condition, .. } => {
                assert_eq!(condition, RunCondition::Coherence)
            }
            RunVerdict::Ok => panic!("back end cannot move first"),
        }
    }

    #[test]
    fn agent_moves_must_be_ordered() {
        let m = build_rea(RingParams::new(4, 2));
        let p = &m.program;
        let s1 = step(p, &m.initial, &fe(), &Choice::none(), &input("d0")).unwrap();
        let s2 = step(p, &s1, &fe(), &Choice::none(), &input("d0")).unwrap_err();
        assert!(matches!(s2, DistError::NotEnabled { .. }));
        let again = EnvDelta::none().set("InSendBit", vec![], int(0));
        let s2 = step(p, &s1, &fe(), &Choice::none(), &again).unwrap();
        let r = Run::from_parts(
            vec![
                Move::new(fe()).with_env(input("d0")),
                Move::new(fe()).with_env(again),
            ],
            vec![],
            vec![m.initial.clone(), s1, s2],
        );
        match validate_run(p, &r) {
            RunVerdict::Violated { condition, moves, .. } => {
                assert_eq!(condition, RunCondition::AgentSequential);
                assert_eq!(moves, vec![0, 1]);
            }
            RunVerdict::Ok => panic!("same-agent moves are incomparable"),
        }
    }

    #[test]
    fn width_two_antichain() {
        let m = build_rea(RingParams::new(2, 2));
        let p = &m.program;
        let mut s = m.initial.clone();
        s.set("p", vec![], int(1)).unwrap();
        s.set("InReceiveBit", vec![], int(1)).unwrap();
        s.set("Buffer", vec![int(0)], Value::datum("d1")).unwrap();
        // InSendBit = 0 differs from InReceiveBit = 1: an input is pending.
        let moves = vec![Move::new(fe()), Move::new(be())];
        let r = Run::with_order(p, s.clone(), moves, vec![]).unwrap();
        assert_eq!(validate_run(p, &r), RunVerdict::Ok);
        assert_eq!(state_at_move(p, &r, 0).unwrap(), s);
        assert_eq!(state_at_move(p, &r, 1).unwrap(), s);
        assert!(!r.precedes(0, 1));
        assert_eq!(state_at_move(p, &r, 2), Err(DistError::UnknownMove(2)));
    }

    #[test]
    fn chain_state_at_move() {
        let m = build_rea(RingParams::new(4, 2));
        let p = &m.program;
        let r = Run::sequential(
            p,
            m.initial.clone(),
            vec![Move::new(fe()).with_env(input("d0")), Move::new(be())],
        )
        .unwrap();
        assert_eq!(state_at_move(p, &r, 0).unwrap(), m.initial);
        assert_eq!(state_at_move(p, &r, 1).unwrap(), r.states()[1]);
    }

    #[test]
    fn non_commuting_antichain_is_reported() {
        let mut v = Vocabulary::new();
        v.insert(FunctionSymbol::dynamic("x", 0));
        let prog = DistributedProgram::new(
            v,
            vec![
                EAModule::single("A", Rule::assign("x", Term::int(5))),
                EAModule::single("B", Rule::assign("x", Term::int(7))),
            ],
        )
        .unwrap();
        let mut s = prog.empty_state(vec![]);
        prog.assign(&mut s, Value::agent("a"), "A");
        prog.assign(&mut s, Value::agent("b"), "B");
        let r = Run::with_order(
            &prog,
            s,
            vec![Move::new(Value::agent("a")), Move::new(Value::agent("b"))],
            vec![],
        )
        .unwrap();
        match validate_run(&prog, &r) {
            RunVerdict::Violated { condition, .. } => {
                assert_eq!(condition, RunCondition::NonConfluent)
            }
            RunVerdict::Ok => panic!("x := 5 and x := 7 do not commute"),
        }
    }

    #[test]
    fn backward_edges_are_rejected() {
        let m = build_rea(RingParams::new(4, 2));
        let r = Run::from_parts(vec![], vec![(1, 0)], vec![m.initial.clone()]);
        assert!(matches!(
            validate_run(&m.program, &r),
            RunVerdict::Violated {
                condition: RunCondition::PartialOrder,
                ..
            }
        ));
    }

    #[test]
    fn module_names_are_checked() {
        let dup = DistributedProgram::new(
            Vocabulary::new(),
            vec![
                EAModule::single("M", Rule::Block(vec![])),
                EAModule::single("M", Rule::Block(vec![])),
            ],
        );
        assert_eq!(dup, Err(DistError::DuplicateModule(name("M"))));
        let me = DistributedProgram::new(
            Vocabulary::new(),
            vec![EAModule::single("Me", Rule::Block(vec![]))],
        );
        assert_eq!(me, Err(DistError::ReservedModuleName(name("Me"))));
    }
}
