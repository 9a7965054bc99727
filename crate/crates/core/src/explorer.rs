//! Bounded breadth-first exploration of a program's moves.
//!
//! A move is an optional environment delta followed by one agent firing at
//! the resulting state. Nodes of the explored graph are states reduced to a
//! representative by a [`Congruence`]; with a scripted environment the
//! position in the script is part of the node as well.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};
use std::ops::{ControlFlow, Range};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::distributed::{
    agent_enabled, Actor, DistError, DistributedProgram, EnvDelta, GlobalState, Move, Run,
};
use crate::equivalence::Congruence;
use crate::rule::{choices, fire, is_consistent, update_set_with, Choice, UpdateSet};
use crate::state::Location;
use crate::term::Env;

/// How the environment may change external functions before each move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnvStrategy {
    /// External functions never change.
    None,
    /// Every combination of the program's environment rules, each either
    /// idle or firing one of its enabled choices.
    Free,
    /// Every assignment of nullary typed external functions to elements of
    /// their universes.
    Unconstrained,
    /// The `i`-th move is preceded by the `i`-th delta; after the script ends
    /// the environment is idle.
    Scripted(Vec<EnvDelta>),
}

impl EnvStrategy {
    fn advance(&self, pos: usize) -> usize {
        match self {
            EnvStrategy::Scripted(s) => (pos + 1).min(s.len()),
            _ => 0,
        }
    }
}

/// The deltas the environment may apply at `s`, without duplicates and with
/// trivial assignments removed. The idle delta comes first when permitted.
pub fn env_deltas(
    p: &DistributedProgram,
    s: &GlobalState,
    strategy: &EnvStrategy,
    pos: usize,
) -> Result<Vec<EnvDelta>, DistError> {
    let raw = match strategy {
        EnvStrategy::None => vec![EnvDelta::none()],
        EnvStrategy::Scripted(script) => {
            vec![script.get(pos).cloned().unwrap_or_default()]
        }
        EnvStrategy::Free => free_deltas(p, s)?,
        EnvStrategy::Unconstrained => unconstrained_deltas(p, s),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for d in raw {
        d.check(p)?;
        let d = d.relative_to(s);
        if seen.insert(d.clone()) {
            out.push(d);
        }
    }
    Ok(out)
}

fn free_deltas(p: &DistributedProgram, s: &GlobalState) -> Result<Vec<EnvDelta>, DistError> {
    let mut acc = vec![EnvDelta::none()];
    for m in p.environment() {
        let mut options = vec![UpdateSet::new()];
        for c in choices(m.rule(), s)? {
            let u = update_set_with(m.rule(), s, &Env::new(), &c)?;
            if is_consistent(&u) && u.is_nontrivial(s) {
                options.push(u);
            }
        }
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for d in &acc {
            'opt: for u in &options {
                let mut e = d.clone();
                for up in u.iter() {
                    match e.0.get(&up.location) {
                        Some(v) if *v != up.value => continue 'opt,
                        _ => {
                            e.0.insert(up.location.clone(), up.value.clone());
                        }
                    }
                }
                next.push(e);
            }
        }
        acc = next;
    }
    for d in &acc {
        for (l, v) in &d.0 {
            if let Some(u) = p.typing().get(&l.symbol).and_then(|u| s.universe(u)) {
                if !u.contains(v) {
                    return Err(DistError::Mistyped {
                        symbol: l.symbol.clone(),
                        value: v.clone(),
                        universe: u.name.clone(),
                    });
                }
            }
        }
    }
    Ok(acc)
}

fn unconstrained_deltas(p: &DistributedProgram, s: &GlobalState) -> Vec<EnvDelta> {
    let mut acc = vec![EnvDelta::none()];
    for sym in p.externals().filter(|f| f.arity == 0) {
        let Some(u) = p.typing().get(&sym.name).and_then(|u| s.universe(u)) else {
            continue;
        };
        let loc = Location::nullary(&sym.name);
        acc = acc
            .iter()
            .flat_map(|d| {
                u.elements.iter().map(|v| {
                    let mut e = d.clone();
                    e.0.insert(loc.clone(), v.clone());
                    e
                })
            })
            .collect();
    }
    acc
}

/// One possible move from a state and where it leads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub actor: Actor,
    pub choice: Choice,
    pub env: EnvDelta,
    /// Updates the agent fired, at the state after the delta.
    pub updates: UpdateSet,
    pub state: GlobalState,
}

impl Transition {
    pub fn to_move(&self) -> Move {
        Move::new(self.actor.agent.clone())
            .with_choice(self.choice.clone())
            .with_env(self.env.clone())
    }
}

/// Every move available at `s`, in a fixed order: environment deltas, then
/// agents in universe order, then choices. Moves by the same agent under
/// the same delta that reach the same state are reported once.
pub fn successors(
    p: &DistributedProgram,
    s: &GlobalState,
    strategy: &EnvStrategy,
    pos: usize,
) -> Result<Vec<Transition>, DistError> {
    let mut out: Vec<Transition> = Vec::new();
    for env in env_deltas(p, s, strategy, pos)? {
        let pre = env.apply(p, s)?;
        for agent in p.agents(&pre) {
            let first = out.len();
            for e in agent_enabled(p, &pre, &agent)? {
                if let Some(l) = e.updates.locations().find(|l| p.is_external(&l.symbol)) {
                    return Err(DistError::ExternalUpdate(l.symbol.clone()));
                }
                let state = fire(&pre, &e.updates)?.state;
                if out[first..].iter().any(|t| t.state == state) {
                    continue;
                }
                out.push(Transition {
                    actor: e.actor,
                    choice: e.choice,
                    env: env.clone(),
                    updates: e.updates,
                    state,
                });
            }
        }
    }
    Ok(out)
}

/// Exploration limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_nodes: 100_000,
            max_depth: 64,
        }
    }
}

impl Bounds {
    pub fn depth(max_depth: usize) -> Self {
        Bounds {
            max_depth,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub state: GlobalState,
    pub depth: usize,
    pub script_pos: usize,
    /// The edge through which the node was first reached.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub actor: Actor,
    pub choice: Choice,
    pub env: EnvDelta,
    pub to: usize,
}

impl Edge {
    pub fn to_move(&self) -> Move {
        Move::new(self.actor.agent.clone())
            .with_choice(self.choice.clone())
            .with_env(self.env.clone())
    }
}

/// Why exploration stopped before closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    MaxNodes,
    MaxDepth,
}

/// The explored part of a program's configuration graph.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out: Vec<Range<usize>>,
    index: HashMap<(GlobalState, usize), usize>,
    truncation: Option<Truncation>,
}

impl TransitionGraph {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges leaving a node; empty for nodes that were not expanded.
    pub fn out_edges(&self, node: usize) -> &[Edge] {
        &self.edges[self.out[node].clone()]
    }

    /// True when every successor of every node is in the graph.
    pub fn is_complete(&self) -> bool {
        self.truncation.is_none()
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    /// The node holding a representative, at script position 0.
    pub fn find(&self, representative: &GlobalState) -> Option<usize> {
        self.index.get(&(representative.clone(), 0)).copied()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Edges of a shortest path from the initial node.
    pub fn path_to(&self, node: usize) -> Vec<&Edge> {
        let mut path = Vec::new();
        let mut at = node;
        while let Some(e) = self.nodes[at].parent {
            path.push(&self.edges[e]);
            at = self.edges[e].from;
        }
        path.reverse();
        path
    }

    /// Replays the shortest path to `node` from `init` as a sequential run.
    pub fn path_run(
        &self,
        p: &DistributedProgram,
        init: &GlobalState,
        node: usize,
    ) -> Result<Run, DistError> {
        let moves = self.path_to(node).into_iter().map(Edge::to_move).collect();
        Run::sequential(p, init.clone(), moves)
    }

    /// Line-delimited JSON: one record per node, then one per edge.
    pub fn write_jsonl(&self, w: &mut dyn Write) -> io::Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            let rec = json!({"id": i, "state": n.state.canonical_text()});
            writeln!(w, "{rec}")?;
        }
        for e in &self.edges {
            let rec = json!({
                "from": e.from,
                "agent": e.actor.to_string(),
                "choice": e.choice,
                "env": e.env,
                "to": e.to,
            });
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }
}

/// Breadth-first closure of the initial configuration under moves, up to
/// the bounds. Nodes at the depth bound are expanded only far enough to tell
/// whether they have unexplored successors; if one does, or if the node
/// bound is hit, the graph is marked truncated.
///
/// The successors of one level are computed in parallel on the current
/// rayon pool and merged in node order, so the result does not depend on
/// scheduling.
pub fn explore(
    p: &DistributedProgram,
    init: &GlobalState,
    cong: &Congruence,
    env: &EnvStrategy,
    bounds: Bounds,
) -> Result<TransitionGraph, DistError> {
    let root = cong.canon(init);
    let mut g = TransitionGraph {
        nodes: vec![Node {
            state: root.clone(),
            depth: 0,
            script_pos: 0,
            parent: None,
        }],
        edges: Vec::new(),
        out: vec![0..0],
        index: HashMap::from([((root, 0), 0)]),
        truncation: None,
    };
    let mut level = vec![0usize];
    while !level.is_empty() {
        let expanded: Vec<Result<Vec<Transition>, DistError>> = level
            .par_iter()
            .map(|&id| {
                let n = &g.nodes[id];
                successors(p, &n.state, env, n.script_pos)
            })
            .collect();
        let mut next = Vec::new();
        for (&id, trs) in level.iter().zip(expanded) {
            let trs = trs?;
            let (depth, pos) = (g.nodes[id].depth, g.nodes[id].script_pos);
            let pos2 = env.advance(pos);
            let start = g.edges.len();
            for t in trs {
                let key = (cong.canon(&t.state), pos2);
                let to = match g.index.get(&key) {
                    Some(&to) => to,
                    None => {
                        if depth >= bounds.max_depth {
                            g.truncation.get_or_insert(Truncation::MaxDepth);
                            continue;
                        }
                        if g.nodes.len() >= bounds.max_nodes {
                            g.truncation.get_or_insert(Truncation::MaxNodes);
                            continue;
                        }
                        let to = g.nodes.len();
                        g.nodes.push(Node {
                            state: key.0.clone(),
                            depth: depth + 1,
                            script_pos: pos2,
                            parent: Some(g.edges.len()),
                        });
                        g.out.push(0..0);
                        g.index.insert(key, to);
                        next.push(to);
                        to
                    }
                };
                g.edges.push(Edge {
                    from: id,
                    actor: t.actor,
                    choice: t.choice,
                    env: t.env,
                    to,
                });
            }
            g.out[id] = start..g.edges.len();
        }
        level = next;
    }
    Ok(g)
}

/// Result of an invariant check.
#[derive(Clone, Debug)]
pub enum InvariantOutcome {
    Holds {
        nodes: usize,
        complete: bool,
    },
    /// A shortest path to a configuration violating the predicate.
    Violated {
        path: Vec<Edge>,
        state: GlobalState,
    },
}

impl InvariantOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, InvariantOutcome::Holds { .. })
    }
}

/// Evaluates `pred` on every explored configuration representative.
pub fn check_invariant(
    p: &DistributedProgram,
    init: &GlobalState,
    cong: &Congruence,
    env: &EnvStrategy,
    bounds: Bounds,
    pred: impl Fn(&GlobalState) -> bool + Sync,
) -> Result<InvariantOutcome, DistError> {
    let g = explore(p, init, cong, env, bounds)?;
    Ok(invariant_on(&g, pred))
}

/// Evaluates `pred` on the nodes of an explored graph.
pub fn invariant_on(
    g: &TransitionGraph,
    pred: impl Fn(&GlobalState) -> bool + Sync,
) -> InvariantOutcome {
    // Node ids follow breadth-first order, so the first violation found is
    // at minimal depth.
    let bad = g.nodes.par_iter().position_first(|n| !pred(&n.state));
    match bad {
        None => InvariantOutcome::Holds {
            nodes: g.node_count(),
            complete: g.is_complete(),
        },
        Some(i) => InvariantOutcome::Violated {
            path: g.path_to(i).into_iter().cloned().collect(),
            state: g.nodes[i].state.clone(),
        },
    }
}

/// Calls `f` on every sequential run of at most `depth` moves, prefixes
/// included, shortest first along each branch. Returns `false` if `f`
/// stopped the enumeration.
pub fn for_each_run(
    p: &DistributedProgram,
    init: &GlobalState,
    env: &EnvStrategy,
    depth: usize,
    f: &mut dyn FnMut(&Run) -> ControlFlow<()>,
) -> Result<bool, DistError> {
    fn go(
        p: &DistributedProgram,
        env: &EnvStrategy,
        depth: usize,
        run: &mut Run,
        f: &mut dyn FnMut(&Run) -> ControlFlow<()>,
    ) -> Result<bool, DistError> {
        if f(run).is_break() {
            return Ok(false);
        }
        if run.len() == depth {
            return Ok(true);
        }
        for t in successors(p, run.final_state(), env, run.len())? {
            let m = t.to_move();
            run.push_fired(m, t.state);
            let more = go(p, env, depth, run, f)?;
            run.pop();
            if !more {
                return Ok(false);
            }
        }
        Ok(true)
    }
    let mut run = Run::empty(init.clone());
    go(p, env, depth, &mut run, f)
}

/// Every sequential run of at most `depth` moves.
pub fn enumerate_runs(
    p: &DistributedProgram,
    init: &GlobalState,
    env: &EnvStrategy,
    depth: usize,
) -> Result<Vec<Run>, DistError> {
    let mut out = Vec::new();
    for_each_run(p, init, env, depth, &mut |r| {
        out.push(r.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Number of explored configurations at each depth, cumulatively.
pub fn counts_by_depth(g: &TransitionGraph) -> Vec<usize> {
    let mut counts = vec![0; g.max_depth() + 1];
    for n in &g.nodes {
        counts[n.depth] += 1;
    }
    let mut total = 0;
    counts
        .into_iter()
        .map(|c| {
            total += c;
            total
        })
        .collect()
}
