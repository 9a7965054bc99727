//! Observables that tell the row and column machines apart even though they
//! are equivalent: which locations several agents touch, how large the
//! counters grow and how many configurations are reachable.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::kind::RingMachine;
use super::machines::RingParams;
use crate::distributed::{potential_footprint, DistError, GlobalState, Machine};
use crate::equivalence::Congruence;
use crate::explorer::{counts_by_depth, explore, Bounds, EnvStrategy, TransitionGraph};
use crate::state::Location;
use crate::value::Value;

/// The registers through which the buffer talks to its environment. They
/// are shared with the environment by design and are not counted.
pub const INTERFACE: &[&str] = &[
    "InputDatum",
    "OutputDatum",
    "InSendBit",
    "InReceiveBit",
    "OutSendBit",
    "OutReceiveBit",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InequivalenceReport {
    pub machine: RingMachine,
    pub n: usize,
    pub data: usize,
    /// Internal locations read or written by more than one agent.
    pub shared_locations: Vec<String>,
    pub shared_count: usize,
    /// Whether the exploration the sharing is taken from closed.
    pub sharing_complete: bool,
    /// Largest counter value among configurations of depth at most `d`.
    pub max_counter_by_depth: Vec<i64>,
    /// Configurations of depth at most `d` under equality of states.
    pub configs_by_depth: Vec<usize>,
}

fn counters(machine: RingMachine) -> &'static [&'static str] {
    match machine {
        RingMachine::Cea => &["pp", "gg"],
        _ => &["p", "g"],
    }
}

/// Internal locations touched by at least two agents anywhere in `g`.
pub fn shared_locations(m: &Machine, g: &TransitionGraph) -> Result<BTreeSet<Location>, DistError> {
    let p = &m.program;
    let internal = |s: &GlobalState, l: &Location| {
        let sym = s.vocabulary().get(&l.symbol);
        !INTERFACE.contains(&l.symbol.as_ref())
            && !p.is_external(&l.symbol)
            && sym.is_some_and(|f| !f.is_static)
    };
    let mut touched: BTreeMap<Location, BTreeSet<Value>> = BTreeMap::new();
    for node in g.nodes() {
        let s = &node.state;
        for agent in p.agents(s) {
            let (reads, writes) = potential_footprint(p, s, &agent)?;
            for l in reads.into_iter().chain(writes) {
                if internal(s, &l) {
                    touched.entry(l).or_default().insert(agent.clone());
                }
            }
        }
    }
    Ok(touched
        .into_iter()
        .filter(|(_, agents)| agents.len() > 1)
        .map(|(l, _)| l)
        .collect())
}

fn counter_magnitude(machine: RingMachine, s: &GlobalState) -> i64 {
    counters(machine)
        .iter()
        .flat_map(|c| s.table(*c).filter_map(|(_, v)| v.as_int()).collect::<Vec<_>>())
        .map(i64::abs)
        .max()
        .unwrap_or(0)
}

/// Sharing, counter growth up to `depth` and reachable configurations for
/// one machine under the free environment.
pub fn inequivalence_metrics(
    machine: RingMachine,
    params: RingParams,
    depth: usize,
) -> Result<InequivalenceReport, DistError> {
    let m = machine.build(params);
    let env = match machine {
        RingMachine::Rea | RingMachine::Cea => EnvStrategy::Free,
        RingMachine::R1 | RingMachine::R2 => EnvStrategy::None,
    };
    let quotient = match machine {
        RingMachine::Cea => Congruence::identity(),
        _ => Congruence::ring_r(params.n()),
    };
    let closure = explore(&m.program, &m.initial, &quotient, &env, Bounds::default())?;
    let shared = shared_locations(&m, &closure)?;

    let bounds = Bounds {
        max_nodes: 2_000_000,
        max_depth: depth,
    };
    let g = explore(&m.program, &m.initial, &Congruence::identity(), &env, bounds)?;
    let mut max_by_depth = vec![0i64; g.max_depth() + 1];
    for n in g.nodes() {
        let c = counter_magnitude(machine, &n.state);
        max_by_depth[n.depth] = max_by_depth[n.depth].max(c);
    }
    for d in 1..max_by_depth.len() {
        max_by_depth[d] = max_by_depth[d].max(max_by_depth[d - 1]);
    }
    Ok(InequivalenceReport {
        machine,
        n: params.n,
        data: params.data,
        shared_count: shared.len(),
        shared_locations: shared.iter().map(ToString::to_string).collect(),
        sharing_complete: closure.is_complete(),
        max_counter_by_depth: max_by_depth,
        configs_by_depth: counts_by_depth(&g),
    })
}
