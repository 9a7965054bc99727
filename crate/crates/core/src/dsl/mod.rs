//! Concrete syntax for programs (`.ea`) and states (`.eas`).
//!
//! ```text
//! function InputDatum/0 external : Data
//!
//! module FrontEnd
//!   if p - g != N and InSendBit != InReceiveBit then
//!     Buffer(p mod N) := InputDatum
//!     p := p + 1
//!   endif
//! ```
//!
//! Operators bind, loosest first: `or`, `and`, `=`/`!=`, `+`/`-`, `mod`,
//! `not`. Comparisons do not chain. Square brackets group like parentheses.

mod lexer;
mod parser;
mod render;

use std::fmt;

use crate::distributed::{DistributedProgram, GlobalState};

pub use render::{render_program, render_state};

/// A position in source text. Lines and columns start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn start() -> Self {
        Span {
            offset: 0,
            line: 1,
            col: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: Option<String>,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            file: None,
            span,
            message: message.into(),
        }
    }

    pub fn in_file(mut self, file: &str) -> Self {
        self.file = Some(file.to_string());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.file.as_deref().unwrap_or("<input>"),
            self.span.line,
            self.span.col,
            self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

pub fn parse_program(text: &str) -> Result<DistributedProgram, Diagnostic> {
    parser::parse_program(text)
}

/// Parses a state description against the program whose vocabulary it
/// interprets.
pub fn parse_state(text: &str, program: &DistributedProgram) -> Result<GlobalState, Diagnostic> {
    parser::parse_state(text, program)
}
