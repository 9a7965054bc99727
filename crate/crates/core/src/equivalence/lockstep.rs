use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::Congruence;
use crate::distributed::{agent_enabled, Actor, DistError, DistributedProgram, Machine};
use crate::explorer::{env_deltas, explore, Bounds, EnvStrategy, TransitionGraph};
use crate::rule::fire;
use crate::state::State;
use crate::value::Name;
use crate::vocab::{AGENTS, ME, MOD};

type StateMap = Arc<dyn Fn(&State) -> Result<State, String> + Send + Sync>;
type ActorMap = Arc<dyn Fn(&State, &Actor) -> Option<Actor> + Send + Sync>;

/// A map from configurations of one machine to configurations of another,
/// with its inverse. Both sides work on representatives.
#[derive(Clone)]
pub struct ConfigMap {
    forward: StateMap,
    backward: StateMap,
}

impl ConfigMap {
    pub fn new(
        forward: impl Fn(&State) -> Result<State, String> + Send + Sync + 'static,
        backward: impl Fn(&State) -> Result<State, String> + Send + Sync + 'static,
    ) -> Self {
        ConfigMap {
            forward: Arc::new(forward),
            backward: Arc::new(backward),
        }
    }

    pub fn identity() -> Self {
        Self::new(|s| Ok(s.clone()), |s| Ok(s.clone()))
    }

    pub fn forward(&self, a: &State) -> Result<State, String> {
        (self.forward)(a)
    }

    pub fn backward(&self, b: &State) -> Result<State, String> {
        (self.backward)(b)
    }
}

/// Which actor of the other machine answers a move, given the configuration
/// the move starts from.
#[derive(Clone)]
pub struct AgentCorrespondence {
    forward: ActorMap,
    backward: ActorMap,
}

impl AgentCorrespondence {
    pub fn new(
        forward: impl Fn(&State, &Actor) -> Option<Actor> + Send + Sync + 'static,
        backward: impl Fn(&State, &Actor) -> Option<Actor> + Send + Sync + 'static,
    ) -> Self {
        AgentCorrespondence {
            forward: Arc::new(forward),
            backward: Arc::new(backward),
        }
    }

    pub fn identity() -> Self {
        Self::new(|_, a| Some(a.clone()), |_, b| Some(b.clone()))
    }

    pub fn forward(&self, a: &State, actor: &Actor) -> Option<Actor> {
        (self.forward)(a, actor)
    }

    pub fn backward(&self, b: &State, actor: &Actor) -> Option<Actor> {
        (self.backward)(b, actor)
    }
}

#[derive(Clone, Debug)]
pub struct LockstepOptions {
    pub env: EnvStrategy,
    pub bounds: Bounds,
}

impl Default for LockstepOptions {
    fn default() -> Self {
        LockstepOptions {
            env: EnvStrategy::Free,
            bounds: Bounds::default(),
        }
    }
}

/// Direction of a checked square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "A->B")]
    Forward,
    #[serde(rename = "B->A")]
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "A->B",
            Direction::Backward => "B->A",
        })
    }
}

/// The first failed obligation found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LockstepFailure {
    /// The map does not take the initial configuration of A to that of B.
    InitialMismatch { expected: String, got: String },
    /// The map is undefined at a reached configuration.
    MapIncomplete {
        direction: Direction,
        config: String,
        reason: String,
    },
    CommonSymbol {
        #[serde(rename = "configA")]
        config_a: String,
        #[serde(rename = "configB")]
        config_b: String,
        symbol: String,
    },
    /// A move has no counterpart actor, or the counterpart is not enabled.
    Enabledness {
        direction: Direction,
        config: String,
        env: String,
        agent: String,
        counterpart: Option<String>,
    },
    /// Firing does not commute with the map.
    SquareFail {
        direction: Direction,
        #[serde(rename = "configA")]
        config_a: String,
        env: String,
        agent: String,
        expected: String,
        got: String,
    },
    NotInjective {
        #[serde(rename = "configA")]
        config_a: String,
        #[serde(rename = "otherA")]
        other_a: String,
        #[serde(rename = "configB")]
        config_b: String,
    },
    /// A reachable configuration of B is not the image of a reachable
    /// configuration of A.
    NotOnto {
        #[serde(rename = "configB")]
        config_b: String,
    },
}

impl fmt::Display for LockstepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LockstepFailure::InitialMismatch { expected, got } => {
                write!(f, "initial configurations differ: expected {expected}, got {got}")
            }
            LockstepFailure::MapIncomplete {
                direction,
                config,
                reason,
            } => write!(f, "map incomplete ({direction}) at {config}: {reason}"),
            LockstepFailure::CommonSymbol {
                config_a, symbol, ..
            } => write!(f, "common symbol `{symbol}` differs at {config_a}"),
            LockstepFailure::Enabledness {
                direction,
                config,
                env,
                agent,
                counterpart,
            } => match counterpart {
                Some(c) => write!(
                    f,
                    "enabledness ({direction}): {agent} moves at {config} after {env} but {c} cannot"
                ),
                None => write!(
                    f,
                    "enabledness ({direction}): {agent} at {config} has no counterpart"
                ),
            },
            LockstepFailure::SquareFail {
                direction,
                config_a,
                env,
                agent,
                expected,
                got,
            } => write!(
                f,
                "square fails ({direction}) for {agent} after {env} at {config_a}: expected {expected}, got {got}"
            ),
            LockstepFailure::NotInjective {
                config_a,
                other_a,
                config_b,
            } => write!(f, "{config_a} and {other_a} both map to {config_b}"),
            LockstepFailure::NotOnto { config_b } => {
                write!(f, "{config_b} is not the image of a reachable configuration")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum LockstepVerdict {
    EquivalentWithinBounds,
    Counterexample { failure: LockstepFailure },
}

#[derive(Clone, Debug, Serialize)]
pub struct LockstepReport {
    #[serde(flatten)]
    pub verdict: LockstepVerdict,
    pub a_configs: usize,
    pub b_configs: usize,
    pub squares: usize,
    /// Both configuration graphs were closed within the bounds.
    pub complete: bool,
}

impl LockstepReport {
    pub fn is_equivalent(&self) -> bool {
        self.verdict == LockstepVerdict::EquivalentWithinBounds
    }
}

impl fmt::Display for LockstepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verdict {
            LockstepVerdict::EquivalentWithinBounds => write!(
                f,
                "equivalent-within-bounds ({}): {} A-configurations, {} B-configurations, {} squares",
                if self.complete {
                    "closure complete"
                } else {
                    "bounds reached"
                },
                self.a_configs,
                self.b_configs,
                self.squares
            ),
            LockstepVerdict::Counterexample { failure } => write!(f, "counterexample: {failure}"),
        }
    }
}

/// Symbols both programs mention, other than the bookkeeping of agents.
fn common_symbols(a: &DistributedProgram, b: &DistributedProgram) -> Vec<Name> {
    let bs = b.mentioned_symbols();
    a.mentioned_symbols()
        .into_iter()
        .filter(|s| bs.contains(s))
        .filter(|s| ![ME, MOD, AGENTS].contains(&s.as_ref()))
        .filter(|s| a.module(s).is_none() && b.module(s).is_none())
        .filter(|s| !a.vocabulary().get(s).is_some_and(|f| f.is_logic()))
        .collect()
}

struct Side<'a> {
    m: &'a Machine,
    cong: &'a Congruence,
    graph: TransitionGraph,
}

type Checked = Result<Result<usize, LockstepFailure>, DistError>;

/// Checks the squares leaving one node of `this`. `image` is the node's
/// representative on the other side, `map` sends representatives of this
/// side to representatives of the other, and `corr` names the answering
/// actor.
fn squares_from(
    dir: Direction,
    this: &Side<'_>,
    other: &Side<'_>,
    node: usize,
    image: &State,
    map: &(dyn Fn(&State) -> Result<State, String> + Sync),
    corr: &(dyn Fn(&State, &Actor) -> Option<Actor> + Sync),
    env: &EnvStrategy,
) -> Checked {
    let (p, q) = (&*this.m.program, &*other.m.program);
    let s = &this.graph.nodes()[node].state;
    let mut count = 0;
    for d in env_deltas(p, s, env, 0)? {
        let pre = d.apply(p, s)?;
        let pre_other = d.apply(q, image)?;
        let mut answers: Vec<(Actor, State)> = Vec::new();
        for agent in q.agents(&pre_other) {
            for e in agent_enabled(q, &pre_other, &agent)? {
                let t = fire(&pre_other, &e.updates)?.state;
                answers.push((e.actor, other.cong.canon(&t)));
            }
        }
        for agent in p.agents(&pre) {
            for e in agent_enabled(p, &pre, &agent)? {
                count += 1;
                let r = this.cong.canon(&fire(&pre, &e.updates)?.state);
                let expected = match map(&r) {
                    Ok(x) => other.cong.canon(&x),
                    Err(reason) => {
                        return Ok(Err(LockstepFailure::MapIncomplete {
                            direction: dir,
                            config: r.canonical_text(),
                            reason,
                        }))
                    }
                };
                let enabledness = |counterpart: Option<&Actor>| LockstepFailure::Enabledness {
                    direction: dir,
                    config: s.canonical_text(),
                    env: d.to_string(),
                    agent: e.actor.to_string(),
                    counterpart: counterpart.map(Actor::to_string),
                };
                let Some(beta) = corr(s, &e.actor) else {
                    return Ok(Err(enabledness(None)));
                };
                let mut got = answers.iter().filter(|(a, _)| *a == beta).map(|(_, t)| t);
                let Some(first) = got.clone().next() else {
                    return Ok(Err(enabledness(Some(&beta))));
                };
                if !got.any(|t| *t == expected) {
                    return Ok(Err(LockstepFailure::SquareFail {
                        direction: dir,
                        config_a: s.canonical_text(),
                        env: d.to_string(),
                        agent: e.actor.to_string(),
                        expected: expected.canonical_text(),
                        got: first.canonical_text(),
                    }));
                }
            }
        }
    }
    Ok(Ok(count))
}

/// The first failure in node order, or the total number of squares.
fn first_failure(results: Vec<Checked>) -> Result<Result<usize, LockstepFailure>, DistError> {
    let mut total = 0;
    for r in results {
        match r? {
            Ok(n) => total += n,
            Err(f) => return Ok(Err(f)),
        }
    }
    Ok(Ok(total))
}

/// Checks that `h` and `corr` witness lock-step equivalence of `a` and `b`
/// on the configurations reachable within the bounds.
///
/// Both configuration graphs are explored. At every configuration of A
/// the common symbols must agree with its image, and every move of A must
/// be answered by the corresponding actor of B with a result that is the
/// image of A's result. The same is checked from every configuration of B
/// through the inverse map. The map must also be injective on A's
/// configurations and reach every configuration of B.
pub fn check_lockstep(
    a: &Machine,
    b: &Machine,
    ca: &Congruence,
    cb: &Congruence,
    h: &ConfigMap,
    corr: &AgentCorrespondence,
    opts: &LockstepOptions,
) -> Result<LockstepReport, DistError> {
    let sa = Side {
        m: a,
        cong: ca,
        graph: explore(&a.program, &a.initial, ca, &opts.env, opts.bounds)?,
    };
    let sb = Side {
        m: b,
        cong: cb,
        graph: explore(&b.program, &b.initial, cb, &opts.env, opts.bounds)?,
    };
    let report = |verdict, squares| LockstepReport {
        verdict,
        a_configs: sa.graph.node_count(),
        b_configs: sb.graph.node_count(),
        squares,
        complete: sa.graph.is_complete() && sb.graph.is_complete(),
    };
    let fail = |failure| {
        Ok(report(
            LockstepVerdict::Counterexample { failure },
            0,
        ))
    };

    let fwd = |s: &State| h.forward(s).map(|x| cb.canon(&x));
    let bwd = |s: &State| h.backward(s).map(|x| ca.canon(&x));

    let a_nodes = sa.graph.nodes();
    let b_nodes = sb.graph.nodes();
    let images: Vec<Result<State, String>> = a_nodes.par_iter().map(|n| fwd(&n.state)).collect();
    match &images[0] {
        Ok(x) if *x == b_nodes[0].state => {}
        Ok(x) => {
            return fail(LockstepFailure::InitialMismatch {
                expected: b_nodes[0].state.canonical_text(),
                got: x.canonical_text(),
            })
        }
        Err(reason) => {
            return fail(LockstepFailure::MapIncomplete {
                direction: Direction::Forward,
                config: a_nodes[0].state.canonical_text(),
                reason: reason.clone(),
            })
        }
    }

    let mut seen: HashMap<&State, usize> = HashMap::new();
    for (i, img) in images.iter().enumerate() {
        let img = match img {
            Ok(x) => x,
            Err(reason) => {
                return fail(LockstepFailure::MapIncomplete {
                    direction: Direction::Forward,
                    config: a_nodes[i].state.canonical_text(),
                    reason: reason.clone(),
                })
            }
        };
        if let Some(&j) = seen.get(img) {
            return fail(LockstepFailure::NotInjective {
                config_a: a_nodes[j].state.canonical_text(),
                other_a: a_nodes[i].state.canonical_text(),
                config_b: img.canonical_text(),
            });
        }
        seen.insert(img, i);
    }

    let common = common_symbols(&a.program, &b.program);
    for (n, img) in a_nodes.iter().zip(&images) {
        let img = img.as_ref().expect("checked above");
        if let Some(f) = common.iter().find(|f| !n.state.agrees_on(img, f)) {
            return fail(LockstepFailure::CommonSymbol {
                config_a: n.state.canonical_text(),
                config_b: img.canonical_text(),
                symbol: f.to_string(),
            });
        }
    }

    let forward: Vec<Checked> = (0..a_nodes.len())
        .into_par_iter()
        .map(|i| {
            let img = images[i].as_ref().expect("checked above");
            squares_from(
                Direction::Forward,
                &sa,
                &sb,
                i,
                img,
                &fwd,
                &|s, x| corr.forward(s, x),
                &opts.env,
            )
        })
        .collect();
    let forward = match first_failure(forward)? {
        Ok(n) => n,
        Err(f) => return fail(f),
    };

    let preimages: Vec<Result<State, String>> =
        b_nodes.par_iter().map(|n| bwd(&n.state)).collect();
    for (n, pre) in b_nodes.iter().zip(&preimages) {
        let pre = match pre {
            Ok(x) => x,
            Err(reason) => {
                return fail(LockstepFailure::MapIncomplete {
                    direction: Direction::Backward,
                    config: n.state.canonical_text(),
                    reason: reason.clone(),
                })
            }
        };
        match fwd(pre) {
            Ok(back) if back == n.state => {}
            Ok(_) | Err(_) => {
                return fail(LockstepFailure::MapIncomplete {
                    direction: Direction::Backward,
                    config: n.state.canonical_text(),
                    reason: "the inverse map does not invert the map here".into(),
                })
            }
        }
        if sa.graph.is_complete() && sa.graph.find(pre).is_none() {
            return fail(LockstepFailure::NotOnto {
                config_b: n.state.canonical_text(),
            });
        }
    }

    let backward: Vec<Checked> = (0..b_nodes.len())
        .into_par_iter()
        .map(|j| {
            let pre = preimages[j].as_ref().expect("checked above");
            squares_from(
                Direction::Backward,
                &sb,
                &sa,
                j,
                pre,
                &bwd,
                &|s, x| corr.backward(s, x),
                &opts.env,
            )
        })
        .collect();
    let backward = match first_failure(backward)? {
        Ok(n) => n,
        Err(f) => return fail(f),
    };
    Ok(report(
        LockstepVerdict::EquivalentWithinBounds,
        forward + backward,
    ))
}

/// Outcome of the strict check, where both congruences are equality.
#[derive(Clone, Debug, Serialize)]
pub struct StrictReport {
    pub a: String,
    pub b: String,
    /// Reachable states of B at two depth bounds.
    pub b_counts: [(usize, usize); 2],
    pub b_complete: bool,
    /// Reachable states of A found, and the depth at which they were found.
    pub a_count: usize,
    pub a_depth: usize,
    pub a_complete: bool,
    /// Set when the counts do not rule out a strict equivalence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lockstep: Option<LockstepReport>,
}

impl StrictReport {
    /// A has more reachable states than B has states in total.
    pub fn diverges(&self) -> bool {
        self.b_complete && self.a_count > self.b_counts[1].1
    }

    pub fn is_equivalent(&self) -> bool {
        !self.diverges() && self.lockstep.as_ref().is_some_and(|l| l.is_equivalent())
    }
}

impl fmt::Display for StrictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [(d1, c1), (d2, c2)] = self.b_counts;
        if self.diverges() {
            return write!(
                f,
                "strict lock-step equivalence fails: {} reaches {} states within depth {}, \
                 but {} has exactly {} reachable states ({} at depth bound {}, {} at depth bound {})",
                self.a, self.a_count, self.a_depth, self.b, c2, c1, d1, c2, d2
            );
        }
        match &self.lockstep {
            Some(l) => write!(f, "strict: {l}"),
            None => write!(
                f,
                "strict check inconclusive: {} not closed ({c1} states at depth {d1}, {c2} at depth {d2})",
                self.b
            ),
        }
    }
}

/// Strict lock-step check with equality as both congruences.
///
/// B's reachable states are counted at two depth bounds `depths.0 <
/// depths.1`. If B closes, A is explored until it has more states than
/// that; a bijection is then impossible. Otherwise the squares are checked
/// with [`check_lockstep`].
pub fn check_strict(
    a: &Machine,
    b: &Machine,
    h: &ConfigMap,
    corr: &AgentCorrespondence,
    opts: &LockstepOptions,
    depths: (usize, usize),
) -> Result<StrictReport, DistError> {
    let id = Congruence::identity();
    let bounds = |d| Bounds {
        max_depth: d,
        ..opts.bounds
    };
    let g1 = explore(&b.program, &b.initial, &id, &opts.env, bounds(depths.0))?;
    let g2 = explore(&b.program, &b.initial, &id, &opts.env, bounds(depths.1))?;
    let b_complete = g1.is_complete() && g2.is_complete() && g1.node_count() == g2.node_count();
    let b_count = g2.node_count();
    let ga = explore(
        &a.program,
        &a.initial,
        &id,
        &opts.env,
        Bounds {
            max_nodes: b_count + 1,
            max_depth: opts.bounds.max_depth.max(depths.1),
        },
    )?;
    let mut r = StrictReport {
        a: a.name.clone(),
        b: b.name.clone(),
        b_counts: [(depths.0, g1.node_count()), (depths.1, b_count)],
        b_complete,
        a_count: ga.node_count(),
        a_depth: ga.max_depth(),
        a_complete: ga.is_complete(),
        lockstep: None,
    };
    if b_complete && !r.diverges() {
        r.lockstep = Some(check_lockstep(a, b, &id, &id, h, corr, opts)?);
    }
    Ok(r)
}
