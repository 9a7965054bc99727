//! Partially ordered runs and their validation.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::{step, DistError, DistributedProgram, EnvDelta, GlobalState};
use crate::rule::Choice;
use crate::value::Value;

/// A move: the environment applies `env`, then `agent` fires its module
/// under `choice`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub agent: Value,
    pub choice: Choice,
    pub env: EnvDelta,
}

impl Move {
    pub fn new(agent: Value) -> Self {
        Move {
            agent,
            choice: Choice::none(),
            env: EnvDelta::none(),
        }
    }

    pub fn with_choice(mut self, c: Choice) -> Self {
        self.choice = c;
        self
    }

    pub fn with_env(mut self, env: EnvDelta) -> Self {
        self.env = env;
        self
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.agent)?;
        if !self.choice.is_empty() {
            write!(f, " {}", self.choice)?;
        }
        if !self.env.is_empty() {
            write!(f, " env {}", self.env)?;
        }
        Ok(())
    }
}

/// A set of moves, by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveSet(Vec<u64>);

impl MoveSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize) {
        let w = i / 64;
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if let Some(w) = self.0.get_mut(i / 64) {
            *w &= !(1 << (i % 64));
        }
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn union_with(&mut self, other: &MoveSet) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, other: &MoveSet) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, w)| w & !other.0.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| wi * 64 + b)
        })
    }
}

impl FromIterator<usize> for MoveSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = MoveSet::new();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

/// A finite run. Moves are stored in one linearization of the run's order;
/// the order itself is the transitive closure of `edges`, which always point
/// forward. `states[i]` is the state after the first `i` moves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    moves: Vec<Move>,
    edges: Vec<(usize, usize)>,
    states: Vec<GlobalState>,
}

impl Run {
    pub fn empty(initial: GlobalState) -> Self {
        Run {
            moves: Vec::new(),
            edges: Vec::new(),
            states: vec![initial],
        }
    }

    /// A run from raw parts, unchecked. Use [`validate_run`] to check it.
    pub fn from_parts(moves: Vec<Move>, edges: Vec<(usize, usize)>, states: Vec<GlobalState>) -> Self {
        Run {
            moves,
            edges,
            states,
        }
    }

    /// A totally ordered run, computing states by firing each move in turn.
    pub fn sequential(
        p: &DistributedProgram,
        initial: GlobalState,
        moves: Vec<Move>,
    ) -> Result<Self, DistError> {
        let edges = (1..moves.len()).map(|i| (i - 1, i)).collect();
        Self::with_order(p, initial, moves, edges)
    }

    /// A run with the given order, computing states along the stored
    /// linearization.
    pub fn with_order(
        p: &DistributedProgram,
        initial: GlobalState,
        moves: Vec<Move>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, DistError> {
        let mut states = Vec::with_capacity(moves.len() + 1);
        states.push(initial);
        for m in &moves {
            let s = step(p, states.last().unwrap(), &m.agent, &m.choice, &m.env)?;
            states.push(s);
        }
        Ok(Run {
            moves,
            edges,
            states,
        })
    }

    /// Appends a move that comes after every existing move.
    pub fn push(&mut self, p: &DistributedProgram, m: Move) -> Result<(), DistError> {
        let s = step(p, self.final_state(), &m.agent, &m.choice, &m.env)?;
        if let Some(last) = self.moves.len().checked_sub(1) {
            self.edges.push((last, last + 1));
        }
        self.moves.push(m);
        self.states.push(s);
        Ok(())
    }

    /// Appends a move whose resulting state is already known.
    pub(crate) fn push_fired(&mut self, m: Move, state: GlobalState) {
        if let Some(last) = self.moves.len().checked_sub(1) {
            self.edges.push((last, last + 1));
        }
        self.moves.push(m);
        self.states.push(state);
    }

    /// Removes the last move of a sequential run.
    pub fn pop(&mut self) -> Option<Move> {
        let m = self.moves.pop()?;
        self.states.pop();
        let n = self.moves.len();
        self.edges.retain(|&(_, j)| j < n);
        Some(m)
    }

    pub fn initial(&self) -> &GlobalState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &GlobalState {
        self.states.last().expect("a run has an initial state")
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn states(&self) -> &[GlobalState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Strict predecessors of every move. Requires forward edges.
    pub fn predecessors(&self) -> Vec<MoveSet> {
        let mut preds = vec![MoveSet::new(); self.moves.len()];
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); self.moves.len()];
        for &(a, b) in &self.edges {
            if a < b && b < self.moves.len() {
                incoming[b].push(a);
            }
        }
        for j in 0..self.moves.len() {
            let mut set = MoveSet::new();
            for &i in &incoming[j] {
                set.union_with(&preds[i].clone());
                set.insert(i);
            }
            preds[j] = set;
        }
        preds
    }

    /// Whether move `i` precedes move `j` in the run's order.
    pub fn precedes(&self, i: usize, j: usize) -> bool {
        i < j && self.predecessors()[j].contains(i)
    }

    /// The state of an initial segment, replaying its moves in stored order.
    pub fn state_of(&self, p: &DistributedProgram, segment: &MoveSet) -> Result<GlobalState, DistError> {
        let mut s = self.initial().clone();
        for i in segment.iter() {
            let m = self.moves.get(i).ok_or(DistError::UnknownMove(i))?;
            s = step(p, &s, &m.agent, &m.choice, &m.env)?;
        }
        Ok(s)
    }
}

/// `Λ(μ)`: the state of the moves strictly below `mv`.
pub fn state_at_move(p: &DistributedProgram, r: &Run, mv: usize) -> Result<GlobalState, DistError> {
    if mv >= r.moves.len() {
        return Err(DistError::UnknownMove(mv));
    }
    let preds = r.predecessors();
    r.state_of(p, &preds[mv])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunCondition {
    PartialOrder,
    AgentSequential,
    StateMap,
    Environment,
    Coherence,
    NonConfluent,
}

impl fmt::Display for RunCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunCondition::PartialOrder => "partial-order",
            RunCondition::AgentSequential => "agent-sequential",
            RunCondition::StateMap => "state-map",
            RunCondition::Environment => "environment",
            RunCondition::Coherence => "coherence",
            RunCondition::NonConfluent => "non-confluent run",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum RunVerdict {
    Ok,
    Violated {
        condition: RunCondition,
        moves: Vec<usize>,
        detail: String,
    },
}

impl RunVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, RunVerdict::Ok)
    }

    fn violated(condition: RunCondition, moves: Vec<usize>, detail: impl Into<String>) -> Self {
        RunVerdict::Violated {
            condition,
            moves,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for RunVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunVerdict::Ok => f.write_str("ok"),
            RunVerdict::Violated {
                condition,
                moves,
                detail,
            } => write!(f, "violated {condition} at moves {moves:?}: {detail}"),
        }
    }
}

/// Checks a finite run: the order is a partial order, each agent's moves are
/// linearly ordered, the state map starts at the initial state, and every
/// initial segment is coherent. Segments that can be reached through several
/// maximal moves must agree on their state.
pub fn validate_run(p: &DistributedProgram, r: &Run) -> RunVerdict {
    let n = r.moves.len();
    for &(a, b) in &r.edges {
        if b >= n || a >= b {
            return RunVerdict::violated(
                RunCondition::PartialOrder,
                vec![a, b],
                "order edges must point forward between existing moves",
            );
        }
    }
    let preds = r.predecessors();
    for j in 0..n {
        for i in 0..j {
            if r.moves[i].agent == r.moves[j].agent && !preds[j].contains(i) {
                return RunVerdict::violated(
                    RunCondition::AgentSequential,
                    vec![i, j],
                    format!("two moves of agent {} are incomparable", r.moves[i].agent),
                );
            }
        }
    }
    if r.states.len() != n + 1 {
        return RunVerdict::violated(
            RunCondition::StateMap,
            vec![],
            format!("{} states for {} moves", r.states.len(), n),
        );
    }
    for (i, m) in r.moves.iter().enumerate() {
        if let Err(e) = m.env.check(p) {
            return RunVerdict::violated(RunCondition::Environment, vec![i], e.to_string());
        }
    }

    // States of all initial segments, built up by size.
    let mut sigma: HashMap<MoveSet, GlobalState> = HashMap::new();
    sigma.insert(MoveSet::new(), r.states[0].clone());
    let mut layer = vec![MoveSet::new()];
    for _ in 0..n {
        let mut next: Vec<MoveSet> = Vec::new();
        for x in &layer {
            for m in 0..n {
                if x.contains(m) || !preds[m].is_subset(x) {
                    continue;
                }
                let mut y = x.clone();
                y.insert(m);
                if !sigma.contains_key(&y) && !next.contains(&y) {
                    next.push(y);
                }
            }
        }
        for y in &next {
            let mut value: Option<(usize, GlobalState)> = None;
            let maximal: Vec<usize> = y
                .iter()
                .filter(|&m| !y.iter().any(|k| preds[k].contains(m)))
                .collect();
            for m in maximal {
                let mut x = y.clone();
                x.remove(m);
                let mv = &r.moves[m];
                let s = match step(p, &sigma[&x], &mv.agent, &mv.choice, &mv.env) {
                    Ok(s) => s,
                    Err(e) => {
                        let mut ms: Vec<usize> = x.iter().collect();
                        ms.push(m);
                        return RunVerdict::violated(RunCondition::Coherence, ms, e.to_string());
                    }
                };
                match &value {
                    None => value = Some((m, s)),
                    Some((m0, s0)) if *s0 != s => {
                        return RunVerdict::violated(
                            RunCondition::NonConfluent,
                            vec![*m0, m],
                            "incomparable moves do not commute",
                        );
                    }
                    Some(_) => {}
                }
            }
            let (_, s) = value.expect("non-empty segments have a maximal move");
            sigma.insert(y.clone(), s);
        }
        layer = next;
    }
    for i in 1..=n {
        let prefix: MoveSet = (0..i).collect();
        if sigma[&prefix] != r.states[i] {
            return RunVerdict::violated(
                RunCondition::Coherence,
                vec![i - 1],
                "stored state differs from the result of firing the move",
            );
        }
    }
    RunVerdict::Ok
}
