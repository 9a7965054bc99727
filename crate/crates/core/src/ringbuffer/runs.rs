//! Run-level checks: the FIFO property, move ordering, causal relaxation of
//! sequential runs and the run correspondence from R1 to R2.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::kind::RingMachine;
use super::machines::{build_r2, RingParams, BACK_END, FRONT_END, INPUT_CHANNEL, OUTPUT_CHANNEL};
use crate::distributed::{
    agent_enabled, footprint, validate_run, Actor, DistError, DistributedProgram, GlobalState,
    Move, Run, RunVerdict,
};
use crate::explorer::{successors, EnvStrategy};
use crate::rule::UpdateSet;
use crate::state::Location;
use crate::value::Value;

/// Whether a move takes a datum in or hands one out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IoKind {
    Input,
    Output,
}

/// Input moves write the buffer; output moves write `OutputDatum`. The
/// datum is the value written.
pub fn classify(updates: &UpdateSet) -> Option<(IoKind, Value)> {
    for u in updates.iter() {
        match u.location.symbol.as_ref() {
            "Buffer" => return Some((IoKind::Input, u.value.clone())),
            "OutputDatum" => return Some((IoKind::Output, u.value.clone())),
            _ => {}
        }
    }
    None
}

/// What one move of a run did.
#[derive(Clone, Debug)]
pub struct MoveInfo {
    /// The state the agent fired at, after the environment delta.
    pub pre: GlobalState,
    pub actor: Actor,
    pub updates: UpdateSet,
    pub reads: BTreeSet<Location>,
    pub writes: BTreeSet<Location>,
}

impl MoveInfo {
    fn touches(&self, l: &Location) -> bool {
        self.reads.contains(l) || self.writes.contains(l)
    }
}

/// Recomputes every move of a run at the state of its predecessors.
pub fn move_infos(p: &DistributedProgram, r: &Run) -> Result<Vec<MoveInfo>, DistError> {
    let preds = r.predecessors();
    let mut out = Vec::with_capacity(r.len());
    for (i, m) in r.moves().iter().enumerate() {
        let below = if preds[i].len() == i {
            r.states()[i].clone()
        } else {
            r.state_of(p, &preds[i])?
        };
        let pre = m.env.apply(p, &below)?;
        let e = agent_enabled(p, &pre, &m.agent)?
            .into_iter()
            .find(|e| e.choice == m.choice)
            .ok_or_else(|| DistError::NotEnabled {
                agent: m.agent.clone(),
                choice: m.choice.clone(),
            })?;
        let (reads, writes) = footprint(p, &pre, &m.agent, &m.choice)?;
        out.push(MoveInfo {
            pre,
            actor: e.actor,
            updates: e.updates,
            reads,
            writes,
        });
    }
    Ok(out)
}

/// Outcome of checking a run's input and output sequences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum FifoVerdict {
    Ok {
        inputs: usize,
        outputs: usize,
        regular: bool,
    },
    /// The `output`-th output has no corresponding input.
    OutputBeforeInput { output: usize },
    WrongDatum {
        output: usize,
        expected: Value,
        got: Value,
    },
    /// Two moves the ordering chain relates are not ordered.
    Unordered {
        first: usize,
        second: usize,
        claim: String,
    },
}

impl FifoVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, FifoVerdict::Ok { .. })
    }
}

impl fmt::Display for FifoVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FifoVerdict::Ok {
                inputs,
                outputs,
                regular,
            } => {
                write!(f, "ok: {inputs} inputs, {outputs} outputs")?;
                if *regular {
                    f.write_str(", regular")?;
                }
                Ok(())
            }
            FifoVerdict::OutputBeforeInput { output } => {
                write!(f, "output {output} has no matching input")
            }
            FifoVerdict::WrongDatum {
                output,
                expected,
                got,
            } => write!(f, "output {output} is {got}, expected {expected}"),
            FifoVerdict::Unordered {
                first,
                second,
                claim,
            } => write!(f, "moves {first} and {second} are unordered ({claim})"),
        }
    }
}

fn buffer_size(r: &Run) -> usize {
    r.initial()
        .read("N", &[])
        .as_int()
        .map_or(1, |n| n.max(1) as usize)
}

/// Checks that the output sequence of `r` is a prefix of its input sequence
/// and that the `i`-th input precedes the `i`-th output, which precedes the
/// `(i + N)`-th input.
pub fn fifo_check(
    machine: RingMachine,
    p: &DistributedProgram,
    r: &Run,
) -> Result<FifoVerdict, DistError> {
    let infos = move_infos(p, r)?;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (i, info) in infos.iter().enumerate() {
        match classify(&info.updates) {
            Some((IoKind::Input, v)) => inputs.push((i, v)),
            Some((IoKind::Output, v)) => outputs.push((i, v)),
            None => {}
        }
    }
    for (j, (_, got)) in outputs.iter().enumerate() {
        match inputs.get(j) {
            None => return Ok(FifoVerdict::OutputBeforeInput { output: j }),
            Some((_, expected)) if expected != got => {
                return Ok(FifoVerdict::WrongDatum {
                    output: j,
                    expected: expected.clone(),
                    got: got.clone(),
                })
            }
            Some(_) => {}
        }
    }
    let n = buffer_size(r);
    let preds = r.predecessors();
    let before = |a: usize, b: usize| a < b && preds[b].contains(a);
    for (j, &(nu, _)) in outputs.iter().enumerate() {
        let mu = inputs[j].0;
        if !before(mu, nu) {
            return Ok(FifoVerdict::Unordered {
                first: mu,
                second: nu,
                claim: format!("input {j} before output {j}"),
            });
        }
        if let Some(&(later, _)) = inputs.get(j + n) {
            if !before(nu, later) {
                return Ok(FifoVerdict::Unordered {
                    first: nu,
                    second: later,
                    claim: format!("output {j} before input {}", j + n),
                });
            }
        }
    }
    Ok(FifoVerdict::Ok {
        inputs: inputs.len(),
        outputs: outputs.len(),
        regular: machine.regularity().holds(inputs.len(), outputs.len()),
    })
}

/// A sequential run breaking the FIFO property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FifoCounterexample {
    pub moves: Vec<String>,
    pub detail: String,
}

/// Result of checking every sequential run up to a depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FifoSearch {
    pub depth: usize,
    /// Runs checked, counting every prefix, empty run included.
    pub runs: u128,
    /// Runs among them that are regular.
    pub regular_runs: u128,
    /// Distinct (state, pending data, remaining depth) triples visited.
    pub memo_entries: usize,
    pub counterexample: Option<FifoCounterexample>,
}

enum Stop {
    Dist(DistError),
    Found(FifoCounterexample),
}

impl From<DistError> for Stop {
    fn from(e: DistError) -> Self {
        Stop::Dist(e)
    }
}

type FifoKey = (GlobalState, VecDeque<Value>, usize);

struct FifoSearcher<'a> {
    p: &'a DistributedProgram,
    env: &'a EnvStrategy,
    depth: usize,
    n: usize,
    memo: HashMap<FifoKey, (u128, u128)>,
    path: Vec<Move>,
}

impl FifoSearcher<'_> {
    fn fail(&self, m: &Move, detail: String) -> Stop {
        let mut moves: Vec<String> = self.path.iter().map(ToString::to_string).collect();
        moves.push(m.to_string());
        Stop::Found(FifoCounterexample { moves, detail })
    }

    /// Runs and regular runs extending the current one. The pending queue
    /// holds data taken in but not yet handed out; inputs and outputs are
    /// counted relative to each other through its length.
    fn go(
        &mut self,
        s: &GlobalState,
        queue: &VecDeque<Value>,
        remaining: usize,
    ) -> Result<(u128, u128), Stop> {
        let key = (s.clone(), queue.clone(), remaining);
        if let Some(&c) = self.memo.get(&key) {
            return Ok(c);
        }
        // With outputs never exceeding inputs, both regularity readings
        // hold exactly when nothing is pending.
        let regular = u128::from(queue.is_empty());
        let mut total = (1u128, regular);
        if remaining > 0 {
            let pos = self.depth - remaining;
            for t in successors(self.p, s, self.env, pos)? {
                let m = t.to_move();
                let mut q = queue.clone();
                match classify(&t.updates) {
                    Some((IoKind::Input, v)) => {
                        q.push_back(v);
                        if q.len() > self.n {
                            let d = format!("{} data pending in a buffer of size {}", q.len(), self.n);
                            return Err(self.fail(&m, d));
                        }
                    }
                    Some((IoKind::Output, v)) => match q.pop_front() {
                        None => return Err(self.fail(&m, format!("output {v} before any input"))),
                        Some(w) if w != v => {
                            return Err(self.fail(&m, format!("output {v}, expected {w}")));
                        }
                        Some(_) => {}
                    },
                    None => {}
                }
                self.path.push(m);
                let (a, b) = self.go(&t.state, &q, remaining - 1)?;
                self.path.pop();
                total.0 += a;
                total.1 += b;
            }
        }
        self.memo.insert(key, total);
        Ok(total)
    }
}

/// Checks the FIFO property and the ordering chain on every sequential run
/// of at most `depth` moves. In a sequential run the chain says that no
/// output comes before its input and that at most `N` data are pending.
pub fn fifo_exhaustive(
    machine: RingMachine,
    params: RingParams,
    env: &EnvStrategy,
    depth: usize,
) -> Result<FifoSearch, DistError> {
    let m = machine.build(params);
    let mut searcher = FifoSearcher {
        p: &m.program,
        env,
        depth,
        n: params.n,
        memo: HashMap::new(),
        path: Vec::new(),
    };
    let result = searcher.go(&m.initial, &VecDeque::new(), depth);
    let memo_entries = searcher.memo.len();
    match result {
        Ok((runs, regular_runs)) => Ok(FifoSearch {
            depth,
            runs,
            regular_runs,
            memo_entries,
            counterexample: None,
        }),
        Err(Stop::Found(c)) => Ok(FifoSearch {
            depth,
            runs: 0,
            regular_runs: 0,
            memo_entries,
            counterexample: Some(c),
        }),
        Err(Stop::Dist(e)) => Err(e),
    }
}

/// Relaxes a sequential run to the order its moves' data dependencies
/// force: a move comes after an earlier one when they belong to the same
/// agent or when one writes a location the other reads or writes.
/// Environment deltas count as writes of the move they precede.
pub fn causal_order(p: &DistributedProgram, r: &Run) -> Result<Run, DistError> {
    let infos = move_infos(p, r)?;
    let mut writes: Vec<BTreeSet<Location>> = Vec::with_capacity(infos.len());
    for (info, m) in infos.iter().zip(r.moves()) {
        let mut w = info.writes.clone();
        w.extend(m.env.0.keys().cloned());
        writes.push(w);
    }
    let mut edges = Vec::new();
    for j in 0..infos.len() {
        for i in 0..j {
            let conflict = r.moves()[i].agent == r.moves()[j].agent
                || !writes[i].is_disjoint(&infos[j].reads)
                || !writes[i].is_disjoint(&writes[j])
                || !infos[i].reads.is_disjoint(&writes[j]);
            if conflict {
                edges.push((i, j));
            }
        }
    }
    Ok(Run::from_parts(
        r.moves().to_vec(),
        edges,
        r.states().to_vec(),
    ))
}

/// Outcome of the ordering checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum OrderingVerdict {
    Ok {
        pairs: usize,
    },
    Incomparable {
        claim: String,
        first: usize,
        second: usize,
    },
}

impl OrderingVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, OrderingVerdict::Ok { .. })
    }
}

impl fmt::Display for OrderingVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderingVerdict::Ok { pairs } => write!(f, "ok: {pairs} pairs ordered"),
            OrderingVerdict::Incomparable {
                claim,
                first,
                second,
            } => write!(f, "{claim}: moves {first} and {second} are incomparable"),
        }
    }
}

/// Checks the linearity claims that apply to `machine` on a run:
///
/// * every machine: the moves of one agent;
/// * R1: input channel and front end, output channel and back end, and the
///   channel moves touching the same buffer slot;
/// * R_ea: the moves touching one buffer slot;
/// * C_ea: all `Get` moves, and all `Put` moves.
pub fn ordering_checks(
    machine: RingMachine,
    p: &DistributedProgram,
    r: &Run,
) -> Result<OrderingVerdict, DistError> {
    let preds = r.predecessors();
    let mut pairs = 0;
    for j in 0..r.len() {
        for i in 0..j {
            if r.moves()[i].agent == r.moves()[j].agent {
                pairs += 1;
                if !preds[j].contains(i) {
                    return Ok(OrderingVerdict::Incomparable {
                        claim: "agent-sequential".into(),
                        first: i,
                        second: j,
                    });
                }
            }
        }
    }
    let infos = &move_infos(p, r)?;
    let n = buffer_size(r);
    let agent = |i: usize| match &r.moves()[i].agent {
        Value::Agent(a) => a.to_string(),
        v => v.to_string(),
    };
    let slot = |k: usize| Location::new("Buffer", vec![Value::Int(k as i64)]);
    let rule = |i: usize| infos[i].actor.rule.as_deref().map(str::to_string);

    let mut claims: Vec<(String, Box<dyn Fn(usize, usize) -> bool + '_>)> = Vec::new();
    match machine {
        RingMachine::R1 => {
            let pair = move |a: &'static str, b: &'static str| {
                move |i: usize, j: usize| {
                    let (x, y) = (agent(i), agent(j));
                    (x == a && y == b) || (x == b && y == a)
                }
            };
            claims.push(("input channel and front end".into(), Box::new(pair(INPUT_CHANNEL, FRONT_END))));
            claims.push(("output channel and back end".into(), Box::new(pair(OUTPUT_CHANNEL, BACK_END))));
            for k in 0..n {
                let l = slot(k);
                let channels = pair(INPUT_CHANNEL, OUTPUT_CHANNEL);
                let same = move |i: usize, j: usize| {
                    (channels(i, j) || agent(i) == agent(j))
                        && [INPUT_CHANNEL, OUTPUT_CHANNEL].contains(&agent(i).as_str())
                        && infos[i].touches(&l)
                        && infos[j].touches(&l)
                };
                claims.push((format!("channel moves on slot {k}"), Box::new(same)));
            }
        }
        RingMachine::Rea => {
            for k in 0..n {
                let l = slot(k);
                claims.push((
                    format!("{k}-slot moves"),
                    Box::new(move |i, j| infos[i].touches(&l) && infos[j].touches(&l)),
                ));
            }
        }
        RingMachine::Cea => {
            for which in ["Get", "Put"] {
                claims.push((
                    format!("{which} moves"),
                    Box::new(move |i, j| {
                        rule(i).as_deref() == Some(which) && rule(j).as_deref() == Some(which)
                    }),
                ));
            }
        }
        RingMachine::R2 => {}
    }

    for (claim, related) in &claims {
        for j in 0..r.len() {
            for i in 0..j {
                if !related(i, j) {
                    continue;
                }
                pairs += 1;
                if !preds[j].contains(i) {
                    return Ok(OrderingVerdict::Incomparable {
                        claim: claim.clone(),
                        first: i,
                        second: j,
                    });
                }
            }
        }
    }
    Ok(OrderingVerdict::Ok { pairs })
}

#[derive(Debug, Error)]
pub enum InduceError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("state {index} of the run has no integer `{symbol}`")]
    NotInteger { index: usize, symbol: &'static str },
    #[error("induced run is not a run of R2: {0}")]
    Invalid(RunVerdict),
}

fn mode_of(s: &GlobalState, agent: &str) -> Value {
    s.read("Mode", &[Value::agent(agent)])
}

fn one_of(v: &Value, modes: &[&str]) -> bool {
    modes.iter().any(|m| *v == Value::mode(m))
}

/// The R2 state corresponding to an R1 state: the common functions are
/// copied, and the four handshake bits are read off the modes.
pub fn induce_r2_state(
    sigma: &GlobalState,
    base: &GlobalState,
    n: usize,
    index: usize,
) -> Result<GlobalState, InduceError> {
    let int = |symbol: &'static str| {
        sigma
            .read(symbol, &[])
            .as_int()
            .ok_or(InduceError::NotInteger { index, symbol })
    };
    let (p, g) = (int("p")?, int("g")?);
    let mut tau = base.clone();
    let set = |t: &mut GlobalState, f: &str, args: Vec<Value>, v: Value| {
        t.set(f, args, v).expect("R2 declares the common functions");
    };
    set(&mut tau, "p", vec![], Value::Int(p));
    set(&mut tau, "g", vec![], Value::Int(g));
    for f in ["InputDatum", "OutputDatum"] {
        set(&mut tau, f, vec![], sigma.read(f, &[]));
    }
    for k in 0..n as i64 {
        set(&mut tau, "Buffer", vec![Value::Int(k)], sigma.read("Buffer", &[Value::Int(k)]));
    }
    for a in [FRONT_END, BACK_END] {
        set(&mut tau, "Mode", vec![Value::agent(a)], mode_of(sigma, a));
    }
    let bit = |b: i64| Value::Int(b);
    let resting = |a: &str| one_of(&mode_of(sigma, a), &["Wait", "Ready"]);
    let in_receive = if resting(FRONT_END) { p.rem_euclid(2) } else { 1 - p.rem_euclid(2) };
    let out_send = if resting(BACK_END) { g.rem_euclid(2) } else { 1 - g.rem_euclid(2) };
    let in_send = if one_of(&mode_of(sigma, super::machines::INPUT_ENV), &["Work"]) {
        in_receive
    } else {
        1 - in_receive
    };
    let out_receive = if one_of(&mode_of(sigma, super::machines::OUTPUT_ENV), &["Ready"]) {
        out_send
    } else {
        1 - out_send
    };
    set(&mut tau, "InReceiveBit", vec![], bit(in_receive));
    set(&mut tau, "OutSendBit", vec![], bit(out_send));
    set(&mut tau, "InSendBit", vec![], bit(in_send));
    set(&mut tau, "OutReceiveBit", vec![], bit(out_receive));
    Ok(tau)
}

/// Compares an R1 state with an R2 state on the functions the two machines
/// share. `Mode` is compared on the buffer agents, the only agents R2 gives
/// a mode.
pub fn r1_r2_agree(sigma: &GlobalState, tau: &GlobalState, n: usize) -> Result<(), String> {
    let mut locs: Vec<(&str, Vec<Value>)> = ["N", "p", "g", "InputDatum", "OutputDatum"]
        .into_iter()
        .map(|f| (f, vec![]))
        .collect();
    locs.extend((0..n as i64).map(|k| ("Buffer", vec![Value::Int(k)])));
    locs.extend([FRONT_END, BACK_END].map(|a| ("Mode", vec![Value::agent(a)])));
    for (f, args) in locs {
        let (a, b) = (sigma.read(f, &args), tau.read(f, &args));
        if a != b {
            return Err(format!("{} is {a} in R1 but {b} in R2", Location::new(f, args)));
        }
    }
    Ok(())
}

/// The run of R2 induced by a run of R1: channel moves become moves of the
/// buffer end they serve, and every state is replaced by its R2
/// counterpart. The result is validated against R2.
pub fn induce_r2_run(params: RingParams, r: &Run) -> Result<Run, InduceError> {
    let r2 = build_r2(params);
    let moves: Vec<Move> = r
        .moves()
        .iter()
        .map(|m| {
            let agent = match &m.agent {
                Value::Agent(a) if a.as_ref() == INPUT_CHANNEL => Value::agent(FRONT_END),
                Value::Agent(a) if a.as_ref() == OUTPUT_CHANNEL => Value::agent(BACK_END),
                a => a.clone(),
            };
            Move {
                agent,
                ..m.clone()
            }
        })
        .collect();
    let states = r
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| induce_r2_state(s, &r2.initial, params.n, i))
        .collect::<Result<Vec<_>, _>>()?;
    let induced = Run::from_parts(moves, r.edges().to_vec(), states);
    match validate_run(&r2.program, &induced) {
        RunVerdict::Ok => Ok(induced),
        v => Err(InduceError::Invalid(v)),
    }
}
