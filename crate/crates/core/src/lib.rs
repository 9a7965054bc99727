//! Evolving algebras: states, rules, distributed programs and runs.

pub mod distributed;
pub mod dsl;
pub mod equivalence;
pub mod error;
pub mod explorer;
pub mod ringbuffer;
pub mod rule;
pub mod state;
pub mod term;
pub mod value;
pub mod vocab;

pub use error::EvalError;
pub use rule::{
    choices, enumerate_choices, fire, is_consistent, is_enabled, update_set, update_set_with,
    Choice, Fired, Rule, Update, UpdateSet,
};
pub use state::{Location, State, Universe};
pub use term::{eval_term, BinOp, Env, Interpretation, Recording, Term};
pub use value::{name, ElementKind, Name, Value};
pub use vocab::{FunctionSymbol, Vocabulary};
pub use distributed::{
    agent_enabled, fire_agent, state_at_move, step, validate_run, view, Actor, DistError,
    DistributedProgram, EAModule, Enabled, EnvDelta, GlobalState, Machine, Move, NamedRule, Run,
    RunVerdict,
};
