use std::collections::BTreeMap;

use super::lexer::{lex, Tok};
use super::{Diagnostic, Span};
use crate::distributed::{Abbreviation, DistributedProgram, EAModule, GlobalState, NamedRule};
use crate::rule::Rule;
use crate::state::Universe;
use crate::term::{BinOp, Term};
use crate::value::{name, ElementKind, Name, Value};
use crate::vocab::{is_logic_symbol, FunctionSymbol, Vocabulary, AGENTS, MOD};

const KEYWORDS: &[&str] = &[
    "module",
    "rule",
    "if",
    "then",
    "else",
    "endif",
    "block",
    "endblock",
    "var",
    "ranges",
    "over",
    "endvar",
    "choose",
    "in",
    "endchoose",
    "and",
    "or",
    "not",
    "mod",
    "function",
    "universe",
    "abbrev",
    "environment",
];

/// Keywords that end a rule sequence.
const SEQ_END: &[&str] = &[
    "endif",
    "else",
    "endblock",
    "endvar",
    "endchoose",
    "rule",
    "module",
    "environment",
    "function",
    "universe",
    "abbrev",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Cursor {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Cursor {
    fn new(text: &str) -> Result<Self, Diagnostic> {
        Ok(Cursor {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> Diagnostic {
        Diagnostic::new(
            self.span(),
            format!("expected {expected}, found {}", self.peek()),
        )
    }

    fn expect(&mut self, t: &Tok) -> Result<Span, Diagnostic> {
        if self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(self.error(&t.to_string()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Span, Diagnostic> {
        if self.at_kw(kw) {
            Ok(self.bump().1)
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            _ => Err(self.error(what)),
        }
    }

    fn int(&mut self) -> Result<i64, Diagnostic> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(i) => {
                self.bump();
                Ok(if neg { -i } else { i })
            }
            _ => Err(self.error("integer")),
        }
    }
}

/// Either an integer or a name, as written in a universe or a state binding.
enum Atom {
    Int(i64),
    Name(String, Span),
}

fn atom(c: &mut Cursor) -> Result<Atom, Diagnostic> {
    match c.peek() {
        Tok::Int(_) | Tok::Minus => Ok(Atom::Int(c.int()?)),
        _ => {
            let (n, sp) = c.ident("a value")?;
            Ok(Atom::Name(n, sp))
        }
    }
}

fn universe_decl(c: &mut Cursor) -> Result<(Universe, Span), Diagnostic> {
    let (n, sp) = c.ident("universe name")?;
    let kind = if c.eat(&Tok::Colon) {
        let (k, ksp) = c.ident("element kind")?;
        Some(ElementKind::from_keyword(&k).ok_or_else(|| {
            Diagnostic::new(
                ksp,
                format!("unknown element kind `{k}` (expected datum, agent, mode or opaque)"),
            )
        })?)
    } else {
        None
    };
    c.expect(&Tok::Eq)?;
    c.expect(&Tok::LBrace)?;
    let mut elements = Vec::new();
    if !c.eat(&Tok::RBrace) {
        loop {
            let v = match atom(c)? {
                Atom::Int(i) => Value::Int(i),
                Atom::Name(e, _) => Value::element(kind.unwrap_or(ElementKind::Opaque), &e),
            };
            if elements.contains(&v) {
                return Err(Diagnostic::new(sp, format!("duplicate element `{v}` in `{n}`")));
            }
            elements.push(v);
            if c.eat(&Tok::RBrace) {
                break;
            }
            c.expect(&Tok::Comma)?;
        }
    }
    Ok((Universe::new(&n, kind, elements), sp))
}

struct ProgramParser {
    c: Cursor,
    scope: Vec<Name>,
    abbrevs: Vec<Abbreviation>,
    uses: Vec<(Name, usize, Span)>,
}

impl ProgramParser {
    fn term(&mut self) -> Result<Term, Diagnostic> {
        let mut l = self.and_term()?;
        while self.c.eat_kw("or") {
            let r = self.and_term()?;
            l = Term::or(l, r);
        }
        Ok(l)
    }

    fn and_term(&mut self) -> Result<Term, Diagnostic> {
        let mut l = self.cmp_term()?;
        while self.c.eat_kw("and") {
            let r = self.cmp_term()?;
            l = Term::and(l, r);
        }
        Ok(l)
    }

    fn cmp_term(&mut self) -> Result<Term, Diagnostic> {
        let l = self.add_term()?;
        let op = match self.c.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return Ok(l),
        };
        self.c.bump();
        let r = self.add_term()?;
        if matches!(self.c.peek(), Tok::Eq | Tok::Ne) {
            return Err(Diagnostic::new(
                self.c.span(),
                "comparisons do not chain; add parentheses",
            ));
        }
        Ok(Term::bin(op, l, r))
    }

    fn add_term(&mut self) -> Result<Term, Diagnostic> {
        let mut l = self.mod_term()?;
        loop {
            let op = match self.c.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(l),
            };
            self.c.bump();
            let r = self.mod_term()?;
            l = Term::bin(op, l, r);
        }
    }

    fn mod_term(&mut self) -> Result<Term, Diagnostic> {
        let mut l = self.not_term()?;
        while self.c.eat_kw("mod") {
            let r = self.not_term()?;
            l = Term::modulo(l, r);
        }
        Ok(l)
    }

    fn not_term(&mut self) -> Result<Term, Diagnostic> {
        if self.c.eat_kw("not") {
            Ok(Term::not(self.not_term()?))
        } else {
            self.atom_term()
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, Diagnostic> {
        let mut args = Vec::new();
        if self.c.eat(&Tok::LParen) {
            loop {
                args.push(self.term()?);
                if self.c.eat(&Tok::RParen) {
                    break;
                }
                if !self.c.eat(&Tok::Comma) {
                    return Err(self.c.error("`,` or `)`"));
                }
            }
        }
        Ok(args)
    }

    fn atom_term(&mut self) -> Result<Term, Diagnostic> {
        match self.c.peek().clone() {
            Tok::Int(_) | Tok::Minus => Ok(Term::int(self.c.int()?)),
            Tok::LParen => {
                self.c.bump();
                let t = self.term()?;
                self.c.expect(&Tok::RParen)?;
                Ok(t)
            }
            Tok::LBracket => {
                self.c.bump();
                let t = self.term()?;
                self.c.expect(&Tok::RBracket)?;
                Ok(t)
            }
            Tok::Ident(_) => {
                let (n, sp) = self.c.ident("a term")?;
                let args = self.args()?;
                if args.is_empty() && self.scope.iter().any(|v| v.as_ref() == n) {
                    return Ok(Term::var(&n));
                }
                if let Some(a) = self.abbrevs.iter().find(|a| a.name.as_ref() == n) {
                    if a.params.len() != args.len() {
                        return Err(Diagnostic::new(
                            sp,
                            format!(
                                "`{n}` takes {} argument(s), found {}",
                                a.params.len(),
                                args.len()
                            ),
                        ));
                    }
                    return Ok(a.expand(&args));
                }
                self.uses.push((name(&n), args.len(), sp));
                Ok(Term::app(&n, args))
            }
            _ => Err(self.c.error("a term")),
        }
    }

    fn at_seq_end(&self) -> bool {
        match self.c.peek() {
            Tok::Eof => true,
            Tok::Ident(s) => SEQ_END.contains(&s.as_str()),
            _ => false,
        }
    }

    fn seq(&mut self) -> Result<Vec<Rule>, Diagnostic> {
        let mut rules = Vec::new();
        loop {
            while self.c.eat(&Tok::Comma) {}
            if self.at_seq_end() {
                return Ok(rules);
            }
            rules.push(self.rule()?);
        }
    }

    fn seq_rule(&mut self) -> Result<Rule, Diagnostic> {
        let mut rs = self.seq()?;
        Ok(if rs.len() == 1 {
            rs.pop().unwrap()
        } else {
            Rule::Block(rs)
        })
    }

    fn bound(&mut self, what: &str) -> Result<Name, Diagnostic> {
        let (v, _) = self.c.ident(what)?;
        Ok(name(&v))
    }

    fn rule(&mut self) -> Result<Rule, Diagnostic> {
        if self.c.eat_kw("block") {
            let rs = self.seq()?;
            self.c.expect_kw("endblock")?;
            return Ok(Rule::Block(rs));
        }
        if self.c.eat_kw("if") {
            let guard = self.term()?;
            self.c.expect_kw("then")?;
            let then = self.seq_rule()?;
            let otherwise = if self.c.eat_kw("else") {
                Some(Box::new(self.seq_rule()?))
            } else {
                None
            };
            self.c.expect_kw("endif")?;
            return Ok(Rule::If {
                guard,
                then: Box::new(then),
                otherwise,
            });
        }
        if self.c.at_kw("var") || self.c.at_kw("choose") {
            let is_var = self.c.eat_kw("var");
            if !is_var {
                self.c.bump();
            }
            let var = self.bound("a variable name")?;
            if is_var {
                self.c.expect_kw("ranges")?;
                self.c.expect_kw("over")?;
            } else {
                self.c.expect_kw("in")?;
            }
            let universe = self.bound("a universe name")?;
            self.scope.push(var.clone());
            let body = self.seq_rule();
            self.scope.pop();
            let body = Box::new(body?);
            self.c
                .expect_kw(if is_var { "endvar" } else { "endchoose" })?;
            return Ok(if is_var {
                Rule::Var {
                    var,
                    universe,
                    body,
                }
            } else {
                Rule::Choose {
                    var,
                    universe,
                    body,
                }
            });
        }
        if matches!(self.c.peek(), Tok::Ident(s) if !is_keyword(s)) {
            let (n, sp) = self.c.ident("a rule")?;
            if self.scope.iter().any(|v| v.as_ref() == n) {
                return Err(Diagnostic::new(sp, format!("cannot assign to variable `{n}`")));
            }
            let args = self.args()?;
            self.c.expect(&Tok::Assign)?;
            let value = self.term()?;
            self.uses.push((name(&n), args.len(), sp));
            return Ok(Rule::Update {
                symbol: name(&n),
                args,
                value,
            });
        }
        Err(self.c.error("a rule"))
    }

    fn body(&mut self) -> Result<Vec<NamedRule>, Diagnostic> {
        let mut rules = Vec::new();
        if !self.c.at_kw("rule") {
            let rs = self.seq()?;
            if !rs.is_empty() {
                let r = if rs.len() == 1 {
                    rs.into_iter().next().unwrap()
                } else {
                    Rule::Block(rs)
                };
                rules.push(NamedRule::anonymous(r));
            }
        }
        while self.c.eat_kw("rule") {
            let (n, _) = self.c.ident("a rule name")?;
            let r = self.seq_rule()?;
            rules.push(NamedRule::named(&n, r));
        }
        Ok(rules)
    }
}

pub(crate) fn parse_program(text: &str) -> Result<DistributedProgram, Diagnostic> {
    let mut p = ProgramParser {
        c: Cursor::new(text)?,
        scope: Vec::new(),
        abbrevs: Vec::new(),
        uses: Vec::new(),
    };
    let mut decls: BTreeMap<Name, (FunctionSymbol, Span)> = BTreeMap::new();
    let mut typing: Vec<(Name, Name)> = Vec::new();
    let mut universes: Vec<Universe> = Vec::new();
    let mut modules: Vec<(EAModule, Span)> = Vec::new();
    let mut env: Vec<EAModule> = Vec::new();
    loop {
        if matches!(p.c.peek(), Tok::Eof) {
            break;
        }
        if p.c.eat_kw("universe") {
            let (u, sp) = universe_decl(&mut p.c)?;
            if universes.iter().any(|x| x.name == u.name) {
                return Err(Diagnostic::new(sp, format!("duplicate universe `{}`", u.name)));
            }
            universes.push(u);
        } else if p.c.eat_kw("function") {
            let (n, sp) = p.c.ident("a function name")?;
            if is_logic_symbol(&n) || n == MOD || n == "Me" {
                return Err(Diagnostic::new(sp, format!("`{n}` is built in")));
            }
            p.c.expect(&Tok::Slash)?;
            let arity = p.c.int()?;
            if arity < 0 {
                return Err(Diagnostic::new(sp, "arity must be non-negative"));
            }
            let mut sym = FunctionSymbol::dynamic(&n, arity as usize);
            loop {
                if p.c.eat_kw("external") {
                    sym.is_external = true;
                } else if p.c.eat_kw("static") {
                    sym.is_static = true;
                } else if p.c.eat_kw("predicate") {
                    sym.is_predicate = true;
                } else {
                    break;
                }
            }
            if p.c.eat(&Tok::Colon) {
                let (u, _) = p.c.ident("a universe name")?;
                typing.push((name(&n), name(&u)));
            }
            if decls.insert(name(&n), (sym, sp)).is_some() {
                return Err(Diagnostic::new(sp, format!("`{n}` is declared twice")));
            }
        } else if p.c.eat_kw("abbrev") {
            let (n, sp) = p.c.ident("an abbreviation name")?;
            if p.abbrevs.iter().any(|a| a.name.as_ref() == n) {
                return Err(Diagnostic::new(sp, format!("`{n}` is defined twice")));
            }
            let mut params = Vec::new();
            p.c.expect(&Tok::LParen)?;
            if !p.c.eat(&Tok::RParen) {
                loop {
                    params.push(p.bound("a parameter name")?);
                    if p.c.eat(&Tok::RParen) {
                        break;
                    }
                    p.c.expect(&Tok::Comma)?;
                }
            }
            p.c.expect(&Tok::Eq)?;
            let saved = std::mem::replace(&mut p.scope, params.clone());
            let body = p.term();
            p.scope = saved;
            p.abbrevs.push(Abbreviation {
                name: name(&n),
                params,
                body: body?,
            });
        } else if p.c.eat_kw("environment") {
            let (n, _) = p.c.ident("an environment rule name")?;
            let rules = p.body()?;
            env.push(EAModule::new(&n, rules));
        } else if p.c.eat_kw("module") {
            let (n, sp) = p.c.ident("a module name")?;
            if modules.iter().any(|(m, _)| m.name().as_ref() == n) {
                return Err(Diagnostic::new(sp, format!("duplicate module name `{n}`")));
            }
            if n == "Me" || n == MOD {
                return Err(Diagnostic::new(sp, format!("`{n}` cannot name a module")));
            }
            let rules = p.body()?;
            modules.push((EAModule::new(&n, rules), sp));
        } else {
            return Err(p
                .c
                .error("`module`, `environment`, `function`, `universe` or `abbrev`"));
        }
    }

    // Every use of a symbol must agree with its declaration and other uses.
    let mut arity: BTreeMap<Name, usize> = BTreeMap::new();
    for (n, (s, _)) in &decls {
        arity.insert(n.clone(), s.arity);
    }
    for u in &universes {
        for e in &u.elements {
            if let Some((_, en)) = e.element_name() {
                arity.insert(name(en), 0);
            }
        }
    }
    for (m, _) in &modules {
        arity.insert(m.name().clone(), 0);
    }
    let logic = Vocabulary::distributed();
    for (n, k, sp) in &p.uses {
        let expected = logic
            .get(n)
            .map(|s| s.arity)
            .or_else(|| arity.get(n).copied());
        match expected {
            Some(e) if e != *k => {
                return Err(Diagnostic::new(
                    *sp,
                    format!("`{n}` used with {k} argument(s) but has arity {e}"),
                ));
            }
            Some(_) => {}
            None => {
                arity.insert(n.clone(), *k);
            }
        }
    }

    let mut vocab = Vocabulary::new();
    for (s, _) in decls.into_values() {
        vocab.insert(s);
    }
    let mods: Vec<EAModule> = modules.into_iter().map(|(m, _)| m).collect();
    let mut prog = DistributedProgram::new(vocab, mods)
        .map_err(|e| Diagnostic::new(Span::start(), e.to_string()))?
        .with_universes(universes)
        .with_environment(env);
    for (s, u) in typing {
        prog = prog.with_typing(&s, &u);
    }
    Ok(prog.with_abbreviations(p.abbrevs))
}

pub(crate) fn parse_state(
    text: &str,
    program: &DistributedProgram,
) -> Result<GlobalState, Diagnostic> {
    let mut c = Cursor::new(text)?;
    let mut universes: Vec<Universe> = Vec::new();
    let mut bindings: Vec<(String, Span, Vec<Atom>, Atom)> = Vec::new();
    while !matches!(c.peek(), Tok::Eof) {
        if c.eat_kw("universe") {
            let (u, sp) = universe_decl(&mut c)?;
            if universes.iter().any(|x| x.name == u.name)
                || program.universes().iter().any(|x| x.name == u.name)
            {
                return Err(Diagnostic::new(sp, format!("duplicate universe `{}`", u.name)));
            }
            universes.push(u);
            continue;
        }
        let (f, sp) = match c.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => (s, c.bump().1),
            _ => return Err(c.error("`universe` or a function binding")),
        };
        let mut args = Vec::new();
        if c.eat(&Tok::LParen) {
            loop {
                args.push(atom(&mut c)?);
                if c.eat(&Tok::RParen) {
                    break;
                }
                if !c.eat(&Tok::Comma) {
                    return Err(c.error("`,` or `)`"));
                }
            }
        }
        c.expect(&Tok::Eq)?;
        let v = atom(&mut c)?;
        bindings.push((f, sp, args, v));
    }

    let mut st = program.empty_state(universes);
    let resolve = |st: &GlobalState, a: &Atom| -> Result<Value, Diagnostic> {
        match a {
            Atom::Int(i) => Ok(Value::Int(*i)),
            Atom::Name(n, sp) => match n.as_str() {
                "true" => Ok(Value::TRUE),
                "false" => Ok(Value::FALSE),
                "undef" => Ok(Value::Undef),
                _ => {
                    if let Some(v) = st.element(n) {
                        Ok(v.clone())
                    } else if program.module(n).is_some() {
                        Ok(Value::opaque(n))
                    } else {
                        Err(Diagnostic::new(
                            *sp,
                            format!("`{n}` is not an element of any declared universe"),
                        ))
                    }
                }
            },
        }
    };
    for (f, sp, args, v) in &bindings {
        let args = args
            .iter()
            .map(|a| resolve(&st, a))
            .collect::<Result<Vec<_>, _>>()?;
        let v = resolve(&st, v)?;
        if let Some(u) = program.typing().get(f.as_str()) {
            let uni = st.universe(u).ok_or_else(|| {
                Diagnostic::new(*sp, format!("`{f}` ranges over undeclared universe `{u}`"))
            })?;
            if !v.is_undef() && !uni.contains(&v) {
                return Err(Diagnostic::new(
                    *sp,
                    format!("value `{v}` of `{f}` is outside declared universe `{u}`"),
                ));
            }
        }
        if f == MOD {
            let agents = st.universe(AGENTS).ok_or_else(|| {
                Diagnostic::new(*sp, "`Mod` is assigned but no universe `Agents` is declared")
            })?;
            if !args.iter().all(|a| agents.contains(a)) {
                return Err(Diagnostic::new(*sp, "`Mod` assigns a module to a non-agent"));
            }
            if !matches!(&v, Value::Opaque(m) if program.module(m).is_some()) {
                return Err(Diagnostic::new(*sp, format!("`{v}` is not a module name")));
            }
        }
        st.set(f, args, v)
            .map_err(|e| Diagnostic::new(*sp, e.to_string()))?;
    }
    for m in program.modules().iter().chain(program.environment()) {
        for u in universes_used(m.rule()) {
            if st.universe(&u).is_none() {
                return Err(Diagnostic::new(
                    Span::start(),
                    format!("module `{}` ranges over undeclared universe `{u}`", m.name()),
                ));
            }
        }
    }
    Ok(st)
}

fn universes_used(r: &Rule) -> Vec<Name> {
    let mut out = Vec::new();
    fn walk(r: &Rule, out: &mut Vec<Name>) {
        match r {
            Rule::Update { .. } => {}
            Rule::Block(rs) => rs.iter().for_each(|r| walk(r, out)),
            Rule::If {
                then, otherwise, ..
            } => {
                walk(then, out);
                if let Some(o) = otherwise {
                    walk(o, out);
                }
            }
            Rule::Var { universe, body, .. } | Rule::Choose { universe, body, .. } => {
                out.push(universe.clone());
                walk(body, out);
            }
        }
    }
    walk(r, &mut out);
    out
}
