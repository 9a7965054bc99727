use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::machines::{build_cea, build_r1, build_r2, build_rea, RingParams};
use crate::distributed::Machine;

/// One of the four ring-buffer machines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RingMachine {
    R1,
    R2,
    Rea,
    Cea,
}

/// How long the output sequence of a regular run must be.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    /// As long as the input sequence.
    Exact,
    /// At least as long as the input sequence.
    AtLeast,
}

impl Regularity {
    pub fn holds(self, inputs: usize, outputs: usize) -> bool {
        match self {
            Regularity::Exact => outputs == inputs,
            Regularity::AtLeast => outputs >= inputs,
        }
    }
}

impl RingMachine {
    pub const ALL: [RingMachine; 4] = [Self::R1, Self::R2, Self::Rea, Self::Cea];

    pub fn build(self, params: RingParams) -> Machine {
        match self {
            RingMachine::R1 => build_r1(params),
            RingMachine::R2 => build_r2(params),
            RingMachine::Rea => build_rea(params),
            RingMachine::Cea => build_cea(params),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            RingMachine::R1 => "r1",
            RingMachine::R2 => "r2",
            RingMachine::Rea => "rea",
            RingMachine::Cea => "cea",
        }
    }

    pub fn regularity(self) -> Regularity {
        match self {
            RingMachine::R1 | RingMachine::R2 => Regularity::Exact,
            RingMachine::Rea | RingMachine::Cea => Regularity::AtLeast,
        }
    }
}

impl fmt::Display for RingMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RingMachine::R1 => "R1",
            RingMachine::R2 => "R2",
            RingMachine::Rea => "R_ea",
            RingMachine::Cea => "C_ea",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown machine `{0}`; expected r1, r2, rea or cea")]
pub struct UnknownMachine(pub String);

impl FromStr for RingMachine {
    type Err = UnknownMachine;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.short_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMachine(s.to_string()))
    }
}
