//! Row and column views of ring-buffer states and the map between them.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::machines::{build_cea, build_rea, RingParams, BACK_END, FRONT_END};
use crate::distributed::{Actor, GlobalState};
use crate::equivalence::{AgentCorrespondence, ConfigMap};
use crate::value::{name, Value};

/// The handshake bits and data registers both machines share.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shared {
    pub buffer: Vec<Value>,
    pub in_send: Value,
    pub in_receive: Value,
    pub out_send: Value,
    pub out_receive: Value,
    pub input: Value,
    pub output: Value,
}

impl Shared {
    fn read(s: &GlobalState, n: usize) -> Self {
        Shared {
            buffer: (0..n as i64)
                .map(|i| s.read("Buffer", &[Value::Int(i)]))
                .collect(),
            in_send: s.read("InSendBit", &[]),
            in_receive: s.read("InReceiveBit", &[]),
            out_send: s.read("OutSendBit", &[]),
            out_receive: s.read("OutReceiveBit", &[]),
            input: s.read("InputDatum", &[]),
            output: s.read("OutputDatum", &[]),
        }
    }

    fn write(&self, s: &mut GlobalState) {
        for (i, v) in self.buffer.iter().enumerate() {
            s.set("Buffer", vec![Value::Int(i as i64)], v.clone())
                .expect("Buffer is declared");
        }
        for (f, v) in [
            ("InSendBit", &self.in_send),
            ("InReceiveBit", &self.in_receive),
            ("OutSendBit", &self.out_send),
            ("OutReceiveBit", &self.out_receive),
            ("InputDatum", &self.input),
            ("OutputDatum", &self.output),
        ] {
            s.set(f, vec![], v.clone()).expect("shared symbol is declared");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error("`{0}` does not hold an integer")]
    NotInteger(&'static str),
    #[error("`{symbol}({index})` holds {value}, not a bit")]
    NotBit {
        symbol: &'static str,
        index: usize,
        value: Value,
    },
    #[error("{count} agents hold the {which} turn")]
    Turn { which: &'static str, count: usize },
}

/// A state of the row machine: two counters over a shared buffer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RowState {
    pub p: i64,
    pub g: i64,
    pub shared: Shared,
}

impl RowState {
    pub fn from_state(s: &GlobalState, params: RingParams) -> Result<Self, ViewError> {
        let int = |f: &'static str| s.read(f, &[]).as_int().ok_or(ViewError::NotInteger(f));
        Ok(RowState {
            p: int("p")?,
            g: int("g")?,
            shared: Shared::read(s, params.n),
        })
    }

    /// This row state written over `base`, a state of the row machine.
    pub fn to_state(&self, base: &GlobalState) -> GlobalState {
        let mut s = base.clone();
        s.set("p", vec![], Value::Int(self.p)).expect("p is declared");
        s.set("g", vec![], Value::Int(self.g)).expect("g is declared");
        self.shared.write(&mut s);
        s
    }
}

/// The two modes of a column agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SlotMode {
    Get,
    Put,
}

impl SlotMode {
    fn value(self) -> Value {
        Value::mode(match self {
            SlotMode::Get => "Get",
            SlotMode::Put => "Put",
        })
    }
}

impl fmt::Display for SlotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A state of the column machine: one bit pair and mode per slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColState {
    pub pp: Vec<u8>,
    pub gg: Vec<u8>,
    pub mode: Vec<SlotMode>,
    pub shared: Shared,
}

impl ColState {
    pub fn from_state(s: &GlobalState, params: RingParams) -> Result<Self, ViewError> {
        let bits = |symbol: &'static str| {
            (0..params.n)
                .map(|i| match s.read(symbol, &[Value::Int(i as i64)]) {
                    Value::Int(b @ (0 | 1)) => Ok(b as u8),
                    value => Err(ViewError::NotBit {
                        symbol,
                        index: i,
                        value,
                    }),
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let put = Value::mode("Put");
        let mode = (0..params.n)
            .map(|i| {
                if s.read("Mode", &[Value::Int(i as i64)]) == put {
                    SlotMode::Put
                } else {
                    SlotMode::Get
                }
            })
            .collect();
        Ok(ColState {
            pp: bits("pp")?,
            gg: bits("gg")?,
            mode,
            shared: Shared::read(s, params.n),
        })
    }

    /// This column state written over `base`, a state of the column machine.
    pub fn to_state(&self, base: &GlobalState) -> GlobalState {
        let mut s = base.clone();
        for i in 0..self.pp.len() {
            let k = vec![Value::Int(i as i64)];
            s.set("pp", k.clone(), Value::Int(self.pp[i].into()))
                .expect("pp is declared");
            s.set("gg", k.clone(), Value::Int(self.gg[i].into()))
                .expect("gg is declared");
            s.set("Mode", k, self.mode[i].value())
                .expect("Mode is declared");
        }
        self.shared.write(&mut s);
        s
    }

    /// Whether the mode of every slot is the one its bits determine.
    pub fn mode_is_redundant(&self) -> bool {
        (0..self.pp.len()).all(|k| (self.mode[k] == SlotMode::Get) == (self.pp[k] == self.gg[k]))
    }
}

/// The bits of one counter in column form: slots before the counter's
/// position have already been flipped in the current round.
pub fn counter_bits(c: i64, n: i64) -> Vec<u8> {
    let round = (c.div_euclid(n) % 2) as u8;
    let pos = c.rem_euclid(n);
    (0..n).map(|i| if i >= pos { round } else { 1 - round }).collect()
}

/// Mode of a slot as its bits determine it.
pub fn derived_mode(pp: u8, gg: u8) -> SlotMode {
    if pp == gg {
        SlotMode::Get
    } else {
        SlotMode::Put
    }
}

/// The column state corresponding to a row state.
pub fn h_map(a: &RowState, params: RingParams) -> ColState {
    let pp = counter_bits(a.p, params.n());
    let gg = counter_bits(a.g, params.n());
    let mode = pp.iter().zip(&gg).map(|(&x, &y)| derived_mode(x, y)).collect();
    ColState {
        pp,
        gg,
        mode,
        shared: a.shared.clone(),
    }
}

/// The unique switch point of a bit pattern: slot 0 if its bit equals the
/// last one, otherwise the slot whose bit differs from its predecessor.
pub fn switch_point(bits: &[u8], which: &'static str) -> Result<usize, ViewError> {
    let n = bits.len();
    let holders: Vec<usize> = (0..n)
        .filter(|&x| {
            if x == 0 {
                bits[0] == bits[n - 1]
            } else {
                bits[x] != bits[x - 1]
            }
        })
        .collect();
    match holders[..] {
        [k] => Ok(k),
        _ => Err(ViewError::Turn {
            which,
            count: holders.len(),
        }),
    }
}

/// The agent whose `InputTurn` holds.
pub fn in_map(c: &ColState) -> Result<usize, ViewError> {
    switch_point(&c.pp, "input")
}

/// The agent whose `OutputTurn` holds.
pub fn out_map(c: &ColState) -> Result<usize, ViewError> {
    switch_point(&c.gg, "output")
}

/// A bit pattern of the switch-point shape: every slot before the switch
/// point carries the opposite bit of every slot from it on.
pub fn has_switch_shape(bits: &[u8], k: usize) -> bool {
    bits[..k].iter().all(|&b| b != bits[k]) && bits[k..].iter().all(|&b| b == bits[k])
}

/// The row state with `0 <= g < 2N` that maps to `c`.
pub fn inverse(c: &ColState, params: RingParams) -> Result<RowState, ViewError> {
    let n = params.n();
    let last = params.n - 1;
    let g = i64::from(c.gg[last]) * n + out_map(c)? as i64;
    let p_mod = i64::from(c.pp[last]) * n + in_map(c)? as i64;
    let p = g + (p_mod - g).rem_euclid(2 * n);
    Ok(RowState {
        p,
        g,
        shared: c.shared.clone(),
    })
}

/// One row of the correspondence between `p` and the bits `pp`, with the
/// position of the slot whose input turn holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PpRow {
    pub p: i64,
    pub pp: Vec<u8>,
    #[serde(rename = "box")]
    pub boxed: usize,
}

impl fmt::Display for PpRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>3}  ", self.p)?;
        for (i, b) in self.pp.iter().enumerate() {
            if i == self.boxed {
                write!(f, " [{b}]")?;
            } else {
                write!(f, "  {b} ")?;
            }
        }
        Ok(())
    }
}

/// Rows `0..rows` of the correspondence between `p` and `pp` for buffer
/// size `n`.
pub fn pp_table(n: usize, rows: usize) -> Vec<PpRow> {
    (0..rows as i64)
        .map(|p| {
            let pp = counter_bits(p, n as i64);
            let boxed = switch_point(&pp, "input").expect("counter bits have one switch point");
            PpRow { p, pp, boxed }
        })
        .collect()
}

/// The configuration map from the row machine to the column machine and
/// its inverse, on states of the built machines.
pub fn rea_cea_map(params: RingParams) -> ConfigMap {
    let row_base = build_rea(params).initial;
    let col_base = build_cea(params).initial;
    ConfigMap::new(
        move |a| {
            let r = RowState::from_state(a, params).map_err(|e| e.to_string())?;
            Ok(h_map(&r, params).to_state(&col_base))
        },
        move |b| {
            let c = ColState::from_state(b, params).map_err(|e| e.to_string())?;
            Ok(inverse(&c, params)
                .map_err(|e| e.to_string())?
                .to_state(&row_base))
        },
    )
}

/// The front end corresponds to the `Get` rule of the slot holding the input
/// turn, the back end to the `Put` rule of the slot holding the output turn.
pub fn rea_cea_correspondence(params: RingParams) -> AgentCorrespondence {
    let front = Value::agent(FRONT_END);
    let back = Value::agent(BACK_END);
    let (front2, back2) = (front.clone(), back.clone());
    let slot = |k: usize, rule: &str| Actor {
        agent: Value::Int(k as i64),
        rule: Some(name(rule)),
    };
    AgentCorrespondence::new(
        move |a, actor| {
            let c = h_map(&RowState::from_state(a, params).ok()?, params);
            if actor.agent == front {
                Some(slot(in_map(&c).ok()?, "Get"))
            } else if actor.agent == back {
                Some(slot(out_map(&c).ok()?, "Put"))
            } else {
                None
            }
        },
        move |b, actor| {
            let c = ColState::from_state(b, params).ok()?;
            let k = actor.agent.as_int()? as usize;
            match actor.rule.as_deref() {
                Some("Get") if in_map(&c).ok()? == k => Some(Actor {
                    agent: front2.clone(),
                    rule: None,
                }),
                Some("Put") if out_map(&c).ok()? == k => Some(Actor {
                    agent: back2.clone(),
                    rule: None,
                }),
                _ => None,
            }
        },
    )
}
