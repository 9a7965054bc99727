//! Congruences on states, configuration maps and the lock-step checker.

mod lockstep;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::distributed::{agent_enabled, DistError, DistributedProgram, GlobalState};
use crate::explorer::{env_deltas, EnvStrategy};
use crate::rule::{choices, fire, Choice};
use crate::state::State;
use crate::value::{name, Name, Value};

pub use lockstep::{
    check_lockstep, check_strict, AgentCorrespondence, ConfigMap, LockstepFailure,
    Direction, LockstepOptions, LockstepReport, LockstepVerdict, StrictReport,
};

type Canon = Arc<dyn Fn(&State) -> State + Send + Sync>;

/// Which symbols equivalent states must interpret identically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Respects {
    All,
    AllBut(Vec<Name>),
}

impl Respects {
    pub fn includes(&self, symbol: &str) -> bool {
        match self {
            Respects::All => true,
            Respects::AllBut(ex) => !ex.iter().any(|e| e.as_ref() == symbol),
        }
    }
}

/// An equivalence on states given by a canonical representative of each
/// class. Two states are equivalent when their representatives are equal.
#[derive(Clone)]
pub struct Congruence {
    name: String,
    canon: Canon,
    respects: Respects,
}

impl fmt::Debug for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Congruence")
            .field("name", &self.name)
            .field("respects", &self.respects)
            .finish_non_exhaustive()
    }
}

impl Congruence {
    pub fn new(
        name: &str,
        respects: Respects,
        canon: impl Fn(&State) -> State + Send + Sync + 'static,
    ) -> Self {
        Congruence {
            name: name.to_string(),
            canon: Arc::new(canon),
            respects,
        }
    }

    /// Equality of states.
    pub fn identity() -> Self {
        Self::new("identity", Respects::All, State::clone)
    }

    /// The ring-buffer congruence for buffer size `n`: `g` agrees modulo
    /// `2n`, `p - g` agrees, and every other symbol agrees. The
    /// representative has `0 <= g < 2n`.
    ///
    /// # Panics
    /// If `n < 1`.
    pub fn ring_r(n: i64) -> Self {
        assert!(n >= 1, "buffer size must be positive");
        let respects = Respects::AllBut(vec![name("p"), name("g")]);
        Self::new(&format!("ring-R:{n}"), respects, move |s| {
            let (Some(p), Some(g)) = (s.read("p", &[]).as_int(), s.read("g", &[]).as_int())
            else {
                return s.clone();
            };
            let g2 = g.rem_euclid(2 * n);
            let mut t = s.clone();
            t.set("g", vec![], Value::Int(g2)).expect("g is declared");
            t.set("p", vec![], Value::Int(g2 + (p - g)))
                .expect("p is declared");
            t
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn respects(&self) -> &Respects {
        &self.respects
    }

    pub fn canon(&self, s: &State) -> State {
        (self.canon)(s)
    }

    pub fn equiv(&self, a: &State, b: &State) -> bool {
        a == b || self.canon(a) == self.canon(b)
    }
}

/// Outcome of a sampled congruence check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CongruenceVerdict {
    Ok {
        pairs: usize,
    },
    /// Two equivalent states disagree on a respected symbol.
    Disrespects {
        pair: usize,
        symbol: String,
    },
    /// A move took two equivalent states to inequivalent ones.
    NotPreserved {
        pair: usize,
        agent: Value,
        choice: Choice,
        env: String,
    },
}

impl CongruenceVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, CongruenceVerdict::Ok { .. })
    }
}

/// Checks that the sampled equivalent pairs agree on every respected symbol.
/// Pairs that are not equivalent are skipped.
pub fn check_respects(c: &Congruence, samples: &[(State, State)]) -> CongruenceVerdict {
    let mut checked = 0;
    for (i, (a, b)) in samples.iter().enumerate() {
        if !c.equiv(a, b) {
            continue;
        }
        checked += 1;
        let symbols = a.vocabulary().iter().chain(b.vocabulary().iter());
        for sym in symbols {
            if c.respects.includes(&sym.name) && !a.agrees_on(b, &sym.name) {
                return CongruenceVerdict::Disrespects {
                    pair: i,
                    symbol: sym.name.to_string(),
                };
            }
        }
    }
    CongruenceVerdict::Ok { pairs: checked }
}

/// The state after the environment applies `env` and the agent fires under
/// `choice`, or after the environment alone when the agent is disabled.
pub fn result(
    p: &DistributedProgram,
    s: &GlobalState,
    agent: &Value,
    choice: &Choice,
    env: &crate::distributed::EnvDelta,
) -> Result<GlobalState, DistError> {
    let pre = env.apply(p, s)?;
    let en = agent_enabled(p, &pre, agent)?;
    match en.into_iter().find(|e| &e.choice == choice) {
        Some(e) => Ok(fire(&pre, &e.updates)?.state),
        None => Ok(pre),
    }
}

/// Checks that every move of `p` preserves equivalence on the sampled pairs:
/// for each pair, agent, choice and environment delta offered at either side,
/// the two results are again equivalent.
pub fn check_congruence(
    c: &Congruence,
    p: &DistributedProgram,
    env: &EnvStrategy,
    samples: &[(State, State)],
) -> Result<CongruenceVerdict, DistError> {
    let mut checked = 0;
    for (i, (a, b)) in samples.iter().enumerate() {
        if !c.equiv(a, b) {
            continue;
        }
        checked += 1;
        let mut deltas = env_deltas(p, a, env, 0)?;
        for d in env_deltas(p, b, env, 0)? {
            if !deltas.contains(&d) {
                deltas.push(d);
            }
        }
        let mut agents = p.agents(a);
        for x in p.agents(b) {
            if !agents.contains(&x) {
                agents.push(x);
            }
        }
        for d in &deltas {
            let (da, db) = (d.apply(p, a)?, d.apply(p, b)?);
            for agent in &agents {
                let mut cs = Vec::new();
                for s in [&da, &db] {
                    if let Some(m) = p.module_of(s, agent) {
                        let v = crate::distributed::AgentView::new(s, agent, m);
                        for ch in choices(m.rule(), &v)? {
                            if !cs.contains(&ch) {
                                cs.push(ch);
                            }
                        }
                    }
                }
                for ch in cs {
                    let ra = result(p, a, agent, &ch, d)?;
                    let rb = result(p, b, agent, &ch, d)?;
                    if !c.equiv(&ra, &rb) {
                        return Ok(CongruenceVerdict::NotPreserved {
                            pair: i,
                            agent: agent.clone(),
                            choice: ch,
                            env: d.to_string(),
                        });
                    }
                }
            }
        }
    }
    Ok(CongruenceVerdict::Ok { pairs: checked })
}
