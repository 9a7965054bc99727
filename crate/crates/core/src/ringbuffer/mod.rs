//! The ring buffer of the case study: four machines, the maps between them
//! and the checks of their properties.

mod kind;
mod lemmas;
mod machines;
mod maps;
mod metrics;
mod runs;

pub use kind::*;
pub use lemmas::*;
pub use machines::*;
pub use maps::*;
pub use metrics::*;
pub use runs::*;
