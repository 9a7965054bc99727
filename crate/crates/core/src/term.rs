//! Terms and their evaluation.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::EvalError;
use crate::state::{Location, State, Universe};
use crate::value::{name, Name, Value};
use crate::vocab::FunctionSymbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Add,
    Sub,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mod => "mod",
        }
    }

    /// Binding strength; larger binds tighter. `not` binds at 6.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mod => 5,
        }
    }
}

pub(crate) const NOT_PRECEDENCE: u8 = 6;
const ATOM_PRECEDENCE: u8 = 7;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    Lit(Value),
    App { symbol: Name, args: Vec<Term> },
    Not(Box<Term>),
    Bin(BinOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(n: &str) -> Term {
        Term::Var(name(n))
    }

    pub fn int(i: i64) -> Term {
        Term::Lit(Value::Int(i))
    }

    pub fn sym(n: &str) -> Term {
        Term::App {
            symbol: name(n),
            args: Vec::new(),
        }
    }

    pub fn app(n: &str, args: Vec<Term>) -> Term {
        Term::App {
            symbol: name(n),
            args,
        }
    }

    pub fn bin(op: BinOp, l: Term, r: Term) -> Term {
        Term::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: Term, r: Term) -> Term {
        Self::bin(BinOp::And, l, r)
    }

    pub fn or(l: Term, r: Term) -> Term {
        Self::bin(BinOp::Or, l, r)
    }

    pub fn eq(l: Term, r: Term) -> Term {
        Self::bin(BinOp::Eq, l, r)
    }

    pub fn ne(l: Term, r: Term) -> Term {
        Self::bin(BinOp::Ne, l, r)
    }

    pub fn add(l: Term, r: Term) -> Term {
        Self::bin(BinOp::Add, l, r)
    }

    pub fn sub(l: Term, r: Term) -> Term {
        Self::bin(BinOp::Sub, l, r)
    }

    pub fn modulo(l: Term, r: Term) -> Term {
        Self::bin(BinOp::Mod, l, r)
    }

    pub fn not(t: Term) -> Term {
        Term::Not(Box::new(t))
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Bin(op, _, _) => op.precedence(),
            Term::Not(_) => NOT_PRECEDENCE,
            Term::Lit(Value::Int(i)) if *i < 0 => NOT_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    /// Function symbols applied anywhere in the term.
    pub fn collect_symbols(&self, out: &mut BTreeSet<Name>) {
        self.visit_applications(&mut |s, _| {
            out.insert(s.clone());
        });
    }

    /// Calls `f` with the symbol and argument count of every application.
    pub fn visit_applications(&self, f: &mut dyn FnMut(&Name, usize)) {
        match self {
            Term::Var(_) | Term::Lit(_) => {}
            Term::App { symbol, args } => {
                f(symbol, args.len());
                for a in args {
                    a.visit_applications(f);
                }
            }
            Term::Not(t) => t.visit_applications(f),
            Term::Bin(_, l, r) => {
                l.visit_applications(f);
                r.visit_applications(f);
            }
        }
    }

    /// Replaces free occurrences of `var` by a literal.
    pub fn substitute(&self, var: &str, value: &Value) -> Term {
        match self {
            Term::Var(v) if v.as_ref() == var => Term::Lit(value.clone()),
            Term::Var(_) | Term::Lit(_) => self.clone(),
            Term::App { symbol, args } => Term::App {
                symbol: symbol.clone(),
                args: args.iter().map(|a| a.substitute(var, value)).collect(),
            },
            Term::Not(t) => Term::Not(Box::new(t.substitute(var, value))),
            Term::Bin(op, l, r) => Term::Bin(
                *op,
                Box::new(l.substitute(var, value)),
                Box::new(r.substitute(var, value)),
            ),
        }
    }

    /// Replaces free variables by terms (used for abbreviation expansion).
    pub fn substitute_terms(&self, subst: &[(Name, Term)]) -> Term {
        match self {
            Term::Var(v) => subst
                .iter()
                .find(|(n, _)| n == v)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| self.clone()),
            Term::Lit(_) => self.clone(),
            Term::App { symbol, args } => Term::App {
                symbol: symbol.clone(),
                args: args.iter().map(|a| a.substitute_terms(subst)).collect(),
            },
            Term::Not(t) => Term::Not(Box::new(t.substitute_terms(subst))),
            Term::Bin(op, l, r) => Term::Bin(
                *op,
                Box::new(l.substitute_terms(subst)),
                Box::new(r.substitute_terms(subst)),
            ),
        }
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, t: &Term, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Lit(v) => write!(f, "{v}"),
            Term::App { symbol, args } => {
                f.write_str(symbol)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            Term::Not(t) => {
                f.write_str("not ")?;
                fmt_child(f, t, t.precedence() < NOT_PRECEDENCE)
            }
            Term::Bin(op, l, r) => {
                let p = op.precedence();
                let non_assoc = matches!(op, BinOp::Eq | BinOp::Ne);
                let lp = l.precedence();
                fmt_child(f, l, lp < p || (non_assoc && lp == p))?;
                write!(f, " {} ", op.symbol())?;
                fmt_child(f, r, r.precedence() <= p)
            }
        }
    }
}

/// Read access to something terms can be evaluated against: a state or an
/// agent's view of a state.
pub trait Interpretation {
    fn read(&self, symbol: &str, args: &[Value]) -> Value;
    fn symbol(&self, symbol: &str) -> Option<&FunctionSymbol>;
    fn universe(&self, name: &str) -> Option<&Universe>;
}

impl Interpretation for State {
    fn read(&self, symbol: &str, args: &[Value]) -> Value {
        State::read(self, symbol, args)
    }

    fn symbol(&self, symbol: &str) -> Option<&FunctionSymbol> {
        self.vocabulary().get(symbol)
    }

    fn universe(&self, name: &str) -> Option<&Universe> {
        State::universe(self, name)
    }
}

/// Wraps an interpretation and records every location read through it.
pub struct Recording<'a, I: ?Sized> {
    inner: &'a I,
    reads: RefCell<BTreeSet<Location>>,
}

impl<'a, I: Interpretation + ?Sized> Recording<'a, I> {
    pub fn new(inner: &'a I) -> Self {
        Recording {
            inner,
            reads: RefCell::new(BTreeSet::new()),
        }
    }

    pub fn into_reads(self) -> BTreeSet<Location> {
        self.reads.into_inner()
    }
}

impl<I: Interpretation + ?Sized> Interpretation for Recording<'_, I> {
    fn read(&self, symbol: &str, args: &[Value]) -> Value {
        self.reads
            .borrow_mut()
            .insert(Location::new(symbol, args.to_vec()));
        self.inner.read(symbol, args)
    }

    fn symbol(&self, symbol: &str) -> Option<&FunctionSymbol> {
        self.inner.symbol(symbol)
    }

    fn universe(&self, name: &str) -> Option<&Universe> {
        self.inner.universe(name)
    }
}

/// Variable bindings; later bindings shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    vars: Vec<(Name, Value)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: Name, v: Value) {
        self.vars.push((var, v));
    }

    pub fn unbind(&mut self) {
        self.vars.pop();
    }

    pub fn with(mut self, var: &str, v: Value) -> Self {
        self.bind(name(var), v);
        self
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n.as_ref() == var)
            .map(|(_, v)| v)
    }
}

fn expect_bool(v: Value, ctx: &str) -> Result<bool, EvalError> {
    v.as_bool()
        .ok_or_else(|| EvalError::Type(format!("{ctx} expects a boolean, got {} `{v}`", v.tag())))
}

fn expect_int(v: Value, ctx: &str) -> Result<i64, EvalError> {
    v.as_int()
        .ok_or_else(|| EvalError::Type(format!("{ctx} expects an integer, got {} `{v}`", v.tag())))
}

/// Evaluates `t` against `s` under the variable bindings `env`.
pub fn eval_term<I: Interpretation + ?Sized>(
    t: &Term,
    s: &I,
    env: &Env,
) -> Result<Value, EvalError> {
    match t {
        Term::Var(v) => env
            .get(v)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Term::Lit(v) => Ok(v.clone()),
        Term::App { symbol, args } => {
            let sym = s
                .symbol(symbol)
                .ok_or_else(|| EvalError::UnknownSymbol(symbol.clone()))?;
            if sym.arity != args.len() {
                return Err(EvalError::ArityMismatch {
                    symbol: symbol.clone(),
                    expected: sym.arity,
                    found: args.len(),
                });
            }
            let vals = args
                .iter()
                .map(|a| eval_term(a, s, env))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(s.read(symbol, &vals))
        }
        Term::Not(t) => Ok(Value::Bool(!expect_bool(eval_term(t, s, env)?, "not")?)),
        Term::Bin(op, l, r) => {
            let lv = eval_term(l, s, env)?;
            let rv = eval_term(r, s, env)?;
            let ctx = op.symbol();
            Ok(match op {
                BinOp::Eq => Value::Bool(lv == rv),
                BinOp::Ne => Value::Bool(lv != rv),
                BinOp::And => Value::Bool(expect_bool(lv, ctx)? & expect_bool(rv, ctx)?),
                BinOp::Or => Value::Bool(expect_bool(lv, ctx)? | expect_bool(rv, ctx)?),
                BinOp::Add | BinOp::Sub | BinOp::Mod => {
                    let (a, b) = (expect_int(lv, ctx)?, expect_int(rv, ctx)?);
                    let overflow = || EvalError::Type(format!("integer overflow in `{ctx}`"));
                    Value::Int(match op {
                        BinOp::Add => a.checked_add(b).ok_or_else(overflow)?,
                        BinOp::Sub => a.checked_sub(b).ok_or_else(overflow)?,
                        _ => {
                            if b == 0 {
                                return Err(EvalError::DivisionByZero);
                            }
                            a.rem_euclid(b)
                        }
                    })
                }
            })
        }
    }
}
