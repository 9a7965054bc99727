//! The invariants of the four machines, checked on their explored
//! configuration graphs and on their short runs.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use super::kind::RingMachine;
use super::machines::{build_cea, cea_abbreviations, RingParams, BACK_END, FRONT_END};
use super::maps::{h_map, has_switch_shape, in_map, out_map, ColState, RowState};
use super::runs::{causal_order, fifo_exhaustive, ordering_checks, OrderingVerdict};
use crate::distributed::{agent_enabled, DistError, GlobalState, Machine};
use crate::equivalence::Congruence;
use crate::explorer::{env_deltas, explore, for_each_run, Bounds, EnvStrategy, TransitionGraph};
use crate::term::{eval_term, Env, Term};
use crate::value::Value;

/// Whether one lemma held on everything it was checked on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaOutcome {
    pub lemma: String,
    pub holds: bool,
    /// Configurations or runs checked.
    pub checked: u128,
    /// False when the check ran on a truncated exploration.
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl std::fmt::Display for LemmaOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.holds { "pass" } else { "FAIL" };
        write!(f, "{verdict}  {} ({} checked", self.lemma, self.checked)?;
        if !self.complete {
            f.write_str(", bounded")?;
        }
        f.write_str(")")?;
        if let Some(d) = &self.detail {
            write!(f, ": {d}")?;
        }
        Ok(())
    }
}

/// Options of a lemma-suite run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteOptions {
    pub bounds: Bounds,
    /// Length of the runs the run-level lemmas enumerate.
    pub run_depth: usize,
    /// Length of the runs the FIFO search covers.
    pub fifo_depth: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            bounds: Bounds {
                max_nodes: 1_000_000,
                max_depth: usize::MAX,
            },
            run_depth: 4,
            fifo_depth: 8,
        }
    }
}

type Check<'a> = Box<dyn Fn(&GlobalState) -> Result<(), String> + Sync + 'a>;

fn on_states(lemma: &str, g: &TransitionGraph, check: &Check<'_>) -> LemmaOutcome {
    let bad = g
        .nodes()
        .par_iter()
        .enumerate()
        .find_map_first(|(i, n)| check(&n.state).err().map(|e| (i, e)));
    LemmaOutcome {
        lemma: lemma.to_string(),
        holds: bad.is_none(),
        checked: g.node_count() as u128,
        complete: g.is_complete(),
        detail: bad.map(|(i, e)| format!("configuration {i}: {e}")),
    }
}

fn int(s: &GlobalState, f: &str) -> Result<i64, String> {
    s.read(f, &[])
        .as_int()
        .ok_or_else(|| format!("{f} is {}", s.read(f, &[])))
}

fn mode(s: &GlobalState, agent: &str) -> Value {
    s.read("Mode", &[Value::agent(agent)])
}

/// `0 <= p - g <= N`, and where R1 and R2 give the buffer ends modes, an
/// empty buffer leaves the back end waiting and a full one the front end.
fn p_g_bounds(n: i64, with_modes: bool) -> Check<'static> {
    Box::new(move |s| {
        let d = int(s, "p")? - int(s, "g")?;
        if !(0..=n).contains(&d) {
            return Err(format!("p - g = {d}"));
        }
        let wait = Value::mode("Wait");
        if with_modes && d == 0 && mode(s, BACK_END) != wait {
            return Err(format!("p = g but the back end is {}", mode(s, BACK_END)));
        }
        if with_modes && d == n && mode(s, FRONT_END) != wait {
            return Err(format!("p - g = N but the front end is {}", mode(s, FRONT_END)));
        }
        Ok(())
    })
}

fn ring_graph(m: &Machine, params: RingParams, env: &EnvStrategy, opts: SuiteOptions) -> Result<TransitionGraph, DistError> {
    explore(&m.program, &m.initial, &Congruence::ring_r(params.n()), env, opts.bounds)
}

fn run_lemmas(
    machine: RingMachine,
    m: &Machine,
    params: RingParams,
    env: &EnvStrategy,
    opts: SuiteOptions,
) -> Result<Vec<LemmaOutcome>, DistError> {
    let mut runs = 0u128;
    let mut failure: Option<String> = None;
    let mut error = None;
    for_each_run(&m.program, &m.initial, env, opts.run_depth, &mut |r| {
        runs += 1;
        let checked = causal_order(&m.program, r).and_then(|c| ordering_checks(machine, &m.program, &c));
        match checked {
            Ok(OrderingVerdict::Ok { .. }) => ControlFlow::Continue(()),
            Ok(v) => {
                let moves: Vec<String> = r.moves().iter().map(ToString::to_string).collect();
                failure = Some(format!("{v} in run [{}]", moves.join("; ")));
                ControlFlow::Break(())
            }
            Err(e) => {
                error = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = error {
        return Err(e);
    }
    let ordering = LemmaOutcome {
        lemma: "ordering of dependent moves".into(),
        holds: failure.is_none(),
        checked: runs,
        complete: true,
        detail: failure,
    };
    let fifo = fifo_exhaustive(machine, params, env, opts.fifo_depth)?;
    let fifo = LemmaOutcome {
        lemma: format!("output is a prefix of input (runs of length <= {})", opts.fifo_depth),
        holds: fifo.counterexample.is_none(),
        checked: fifo.runs,
        complete: true,
        detail: fifo
            .counterexample
            .map(|c| format!("{} after [{}]", c.detail, c.moves.join("; "))),
    };
    Ok(vec![ordering, fifo])
}

/// Runs every lemma that applies to `machine`.
pub fn lemma_suite(
    machine: RingMachine,
    params: RingParams,
    opts: SuiteOptions,
) -> Result<Vec<LemmaOutcome>, DistError> {
    let m = machine.build(params);
    let n = params.n();
    let mut out = match machine {
        RingMachine::R1 => r1_lemmas(&m, params, opts)?,
        RingMachine::R2 => r2_lemmas(&m, params, opts)?,
        RingMachine::Rea => rea_lemmas(&m, params, opts)?,
        RingMachine::Cea => cea_lemmas(&m, n, params, opts)?,
    };
    let env = match machine {
        RingMachine::R1 | RingMachine::R2 => EnvStrategy::None,
        RingMachine::Rea | RingMachine::Cea => EnvStrategy::Free,
    };
    out.extend(run_lemmas(machine, &m, params, &env, opts)?);
    Ok(out)
}

fn r1_lemmas(m: &Machine, params: RingParams, opts: SuiteOptions) -> Result<Vec<LemmaOutcome>, DistError> {
    let g = ring_graph(m, params, &EnvStrategy::None, opts)?;
    let data = params.data_values();
    let modes = ["Wait", "Ready", "Work"].map(Value::mode);
    let agents = m
        .initial
        .universe("SendersAndReceivers")
        .map(|u| u.elements.clone())
        .unwrap_or_default();
    let typing: Check<'_> = Box::new(move |s| {
        int(s, "p")?;
        int(s, "g")?;
        for a in &agents {
            let v = s.read("Mode", std::slice::from_ref(a));
            if !modes.contains(&v) {
                return Err(format!("Mode({a}) = {v}"));
            }
        }
        for k in 0..params.n() {
            let v = s.read("Buffer", &[Value::Int(k)]);
            if !v.is_undef() && !data.contains(&v) {
                return Err(format!("Buffer({k}) = {v}"));
            }
        }
        Ok(())
    });
    Ok(vec![
        on_states("typing", &g, &typing),
        on_states("0 <= p - g <= N, with waiting ends", &g, &p_g_bounds(params.n(), true)),
    ])
}

fn r2_lemmas(m: &Machine, params: RingParams, opts: SuiteOptions) -> Result<Vec<LemmaOutcome>, DistError> {
    let g = ring_graph(m, params, &EnvStrategy::None, opts)?;
    let bits: Check<'_> = Box::new(|s| {
        let resting = |a: &str| [Value::mode("Wait"), Value::mode("Ready")].contains(&mode(s, a));
        for (bit, counter, end) in [("InReceiveBit", "p", FRONT_END), ("OutSendBit", "g", BACK_END)] {
            let c = int(s, counter)?.rem_euclid(2);
            let want = if resting(end) { c } else { 1 - c };
            if int(s, bit)? != want {
                return Err(format!("{bit} = {} with {counter} = {}", int(s, bit)?, int(s, counter)?));
            }
        }
        Ok(())
    });
    Ok(vec![
        on_states("0 <= p - g <= N, with waiting ends", &g, &p_g_bounds(params.n(), true)),
        on_states("handshake bits follow counters and modes", &g, &bits),
    ])
}

fn rea_lemmas(m: &Machine, params: RingParams, opts: SuiteOptions) -> Result<Vec<LemmaOutcome>, DistError> {
    let g = ring_graph(m, params, &EnvStrategy::Free, opts)?;
    let n = params.n();
    let row = move |s: &GlobalState| RowState::from_state(s, params).map_err(|e| e.to_string());
    let maps: Check<'_> = Box::new(move |s| {
        let a = row(s)?;
        let c = h_map(&a, params);
        let (i, o) = (in_map(&c).map_err(|e| e.to_string())?, out_map(&c).map_err(|e| e.to_string())?);
        if i as i64 != a.p.rem_euclid(n) || o as i64 != a.g.rem_euclid(n) {
            return Err(format!("In = {i}, Out = {o} at p = {}, g = {}", a.p, a.g));
        }
        Ok(())
    });
    let well_defined: Check<'_> = Box::new(move |s| {
        let a = row(s)?;
        let c = h_map(&a, params);
        for k in 1..=2 {
            let mut b = a.clone();
            b.p += 2 * n * k;
            b.g += 2 * n * k;
            let parity = |x: i64| x.div_euclid(n).rem_euclid(2);
            if parity(a.p) != parity(b.p) || parity(a.g) != parity(b.g) {
                return Err(format!("rounds differ between p = {} and p = {}", a.p, b.p));
            }
            if h_map(&b, params) != c {
                return Err(format!("h differs between p = {} and p = {}", a.p, b.p));
            }
        }
        Ok(())
    });
    let cea = build_cea(params);
    let program = m.program.clone();
    let enabledness: Check<'_> = Box::new(move |s| {
        let err = |e: DistError| e.to_string();
        for d in env_deltas(&program, s, &EnvStrategy::Free, 0).map_err(err)? {
            let pre = d.apply(&program, s).map_err(err)?;
            let c = h_map(&row(&pre)?, params);
            let image = c.to_state(&cea.initial);
            let pairs = [
                (FRONT_END, in_map(&c).map_err(|e| e.to_string())?, "Get"),
                (BACK_END, out_map(&c).map_err(|e| e.to_string())?, "Put"),
            ];
            for (end, k, rule) in pairs {
                let a_on = !agent_enabled(&program, &pre, &Value::agent(end)).map_err(err)?.is_empty();
                let b_on = agent_enabled(&cea.program, &image, &Value::Int(k as i64))
                    .map_err(err)?
                    .iter()
                    .any(|e| e.actor.rule.as_deref() == Some(rule));
                if a_on != b_on {
                    return Err(format!("{end} enabled: {a_on}, {rule} of slot {k} enabled: {b_on}"));
                }
            }
        }
        Ok(())
    });
    Ok(vec![
        on_states("0 <= p - g <= N", &g, &p_g_bounds(n, false)),
        on_states("In(h(a)) = p mod N and Out(h(a)) = g mod N", &g, &maps),
        on_states("h is constant on congruence classes", &g, &well_defined),
        on_states("enabledness corresponds under h", &g, &enabledness),
    ])
}

fn cea_lemmas(m: &Machine, n: i64, params: RingParams, opts: SuiteOptions) -> Result<Vec<LemmaOutcome>, DistError> {
    let g = explore(&m.program, &m.initial, &Congruence::identity(), &EnvStrategy::Free, opts.bounds)?;
    let col = move |s: &GlobalState| ColState::from_state(s, params).map_err(|e| e.to_string());
    let abbrevs = cea_abbreviations();
    let turns: Vec<(String, Term)> = abbrevs
        .iter()
        .map(|a| (a.name.to_string(), a.body.clone()))
        .collect();
    let unique: Check<'_> = Box::new(move |s| {
        for (turn, body) in &turns {
            let mut holders = Vec::new();
            for k in 0..n {
                let env = Env::new().with("x", Value::Int(k));
                let v = eval_term(body, s, &env).map_err(|e| e.to_string())?;
                if v == Value::Bool(true) {
                    holders.push(k);
                }
            }
            if holders.len() != 1 {
                return Err(format!("{turn} holds for {holders:?}"));
            }
        }
        Ok(())
    });
    let shape: Check<'_> = Box::new(move |s| {
        let c = col(s)?;
        let (i, o) = (in_map(&c).map_err(|e| e.to_string())?, out_map(&c).map_err(|e| e.to_string())?);
        if !has_switch_shape(&c.pp, i) || !has_switch_shape(&c.gg, o) {
            return Err(format!("pp = {:?}, gg = {:?}", c.pp, c.gg));
        }
        Ok(())
    });
    let redundant: Check<'_> = Box::new(move |s| {
        let c = col(s)?;
        if c.mode_is_redundant() {
            Ok(())
        } else {
            Err(format!("Mode = {:?} with pp = {:?}, gg = {:?}", c.mode, c.pp, c.gg))
        }
    });
    let bits: Check<'_> = Box::new(move |s| col(s).map(drop));
    Ok(vec![
        on_states("exactly one agent holds each turn", &g, &unique),
        on_states("pp and gg switch once", &g, &shape),
        on_states("Mode(k) = Get iff pp(k) = gg(k)", &g, &redundant),
        on_states("pp and gg are bits", &g, &bits),
    ])
}
