use std::fmt::Write;

use std::collections::BTreeMap;

use crate::distributed::{Abbreviation, DistributedProgram, EAModule, GlobalState};
use crate::rule::Rule;
use crate::state::Universe;
use crate::term::Term;
use crate::value::{Name, Value};
use crate::vocab::{is_logic_symbol, ME, MOD};

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Renders a rule that stands alone on its lines.
fn rule_item(out: &mut String, r: &Rule, depth: usize, ab: &[Abbreviation]) {
    match r {
        Rule::Update {
            symbol,
            args,
            value,
        } => {
            indent(out, depth);
            out.push_str(symbol);
            if !args.is_empty() {
                let a: Vec<String> = args.iter().map(|t| fold(t, ab).to_string()).collect();
                write!(out, "({})", a.join(", ")).unwrap();
            }
            writeln!(out, " := {}", fold(value, ab)).unwrap();
        }
        Rule::Block(rs) => {
            indent(out, depth);
            out.push_str("block\n");
            for r in rs {
                rule_item(out, r, depth + 1, ab);
            }
            indent(out, depth);
            out.push_str("endblock\n");
        }
        Rule::If {
            guard,
            then,
            otherwise,
        } => {
            indent(out, depth);
            writeln!(out, "if {} then", fold(guard, ab)).unwrap();
            rule_seq(out, then, depth + 1, ab);
            if let Some(o) = otherwise {
                indent(out, depth);
                out.push_str("else\n");
                rule_seq(out, o, depth + 1, ab);
            }
            indent(out, depth);
            out.push_str("endif\n");
        }
        Rule::Var {
            var,
            universe,
            body,
        } => {
            indent(out, depth);
            writeln!(out, "var {var} ranges over {universe}").unwrap();
            rule_seq(out, body, depth + 1, ab);
            indent(out, depth);
            out.push_str("endvar\n");
        }
        Rule::Choose {
            var,
            universe,
            body,
        } => {
            indent(out, depth);
            writeln!(out, "choose {var} in {universe}").unwrap();
            rule_seq(out, body, depth + 1, ab);
            indent(out, depth);
            out.push_str("endchoose\n");
        }
    }
}

/// Renders a rule in a position where a sequence of rules is allowed; a
/// block of two or more rules is written as its members.
fn rule_seq(out: &mut String, r: &Rule, depth: usize, ab: &[Abbreviation]) {
    match r {
        Rule::Block(rs) if rs.len() >= 2 => {
            for r in rs {
                rule_item(out, r, depth, ab);
            }
        }
        _ => rule_item(out, r, depth, ab),
    }
}

fn module_body(out: &mut String, m: &EAModule, ab: &[Abbreviation]) {
    match m.rules() {
        [one] if one.name.is_none() => rule_seq(out, &one.rule, 1, ab),
        rules => {
            for (i, r) in rules.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                match &r.name {
                    Some(n) => {
                        writeln!(out, "  rule {n}").unwrap();
                        rule_seq(out, &r.rule, 2, ab);
                    }
                    None => rule_seq(out, &r.rule, 1, ab),
                }
            }
        }
    }
}

/// Replaces each instance of an abbreviation's body by a call of the
/// abbreviation, outermost first.
fn fold(t: &Term, ab: &[Abbreviation]) -> Term {
    for a in ab {
        let mut binding = BTreeMap::new();
        if matches(&a.body, t, &a.params, &mut binding) && binding.len() == a.params.len() {
            let args = a.params.iter().map(|p| fold(&binding[p], ab)).collect();
            return Term::App {
                symbol: a.name.clone(),
                args,
            };
        }
    }
    match t {
        Term::Var(_) | Term::Lit(_) => t.clone(),
        Term::App { symbol, args } => Term::App {
            symbol: symbol.clone(),
            args: args.iter().map(|x| fold(x, ab)).collect(),
        },
        Term::Not(x) => Term::Not(Box::new(fold(x, ab))),
        Term::Bin(op, l, r) => Term::Bin(*op, Box::new(fold(l, ab)), Box::new(fold(r, ab))),
    }
}

fn matches(
    pat: &Term,
    t: &Term,
    params: &[Name],
    binding: &mut BTreeMap<Name, Term>,
) -> bool {
    match (pat, t) {
        (Term::Var(x), _) if params.contains(x) => match binding.get(x) {
            Some(b) => b == t,
            None => {
                binding.insert(x.clone(), t.clone());
                true
            }
        },
        (Term::Var(x), Term::Var(y)) => x == y,
        (Term::Lit(a), Term::Lit(b)) => a == b,
        (
            Term::App { symbol: f, args: xs },
            Term::App { symbol: g, args: ys },
        ) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| matches(x, y, params, binding))
        }
        (Term::Not(a), Term::Not(b)) => matches(a, b, params, binding),
        (Term::Bin(o, a, b), Term::Bin(p, c, d)) => {
            o == p && matches(a, c, params, binding) && matches(b, d, params, binding)
        }
        _ => false,
    }
}

fn universe_line(out: &mut String, u: &Universe) {
    write!(out, "universe {}", u.name).unwrap();
    if let Some(k) = u.kind {
        write!(out, " : {}", k.keyword()).unwrap();
    }
    let es: Vec<String> = u.elements.iter().map(|e| e.to_string()).collect();
    writeln!(out, " = {{{}}}", es.join(", ")).unwrap();
}

/// Canonical text of a program: universes, declarations, abbreviations,
/// environment rules, then modules.
pub fn render_program(p: &DistributedProgram) -> String {
    let mut out = String::new();
    let section = |out: &mut String| {
        if !out.is_empty() {
            out.push('\n');
        }
    };
    if !p.universes().is_empty() {
        section(&mut out);
        for u in p.universes() {
            universe_line(&mut out, u);
        }
    }
    let mentioned: std::collections::BTreeSet<_> = p
        .modules()
        .iter()
        .chain(p.environment())
        .flat_map(|m| m.symbols().iter().cloned())
        .collect();
    let implied = |n: &str| {
        p.module(n).is_some()
            || p
                .universes()
                .iter()
                .any(|u| u.elements.iter().any(|e| e.element_name().is_some_and(|(_, en)| en == n)))
    };
    let decls: Vec<String> = p
        .vocabulary()
        .iter()
        .filter(|s| !is_logic_symbol(&s.name) && s.name.as_ref() != MOD && s.name.as_ref() != ME)
        .filter(|s| !implied(&s.name))
        .filter(|s| {
            s.is_external
                || s.is_static
                || s.is_predicate
                || p.typing().contains_key(&s.name)
                || !mentioned.contains(&s.name)
        })
        .map(|s| {
            let mut line = format!("function {}/{}", s.name, s.arity);
            if s.is_external {
                line.push_str(" external");
            }
            if s.is_static {
                line.push_str(" static");
            }
            if s.is_predicate {
                line.push_str(" predicate");
            }
            if let Some(u) = p.typing().get(&s.name) {
                write!(line, " : {u}").unwrap();
            }
            line
        })
        .collect();
    if !decls.is_empty() {
        section(&mut out);
        for d in decls {
            writeln!(out, "{d}").unwrap();
        }
    }
    if !p.abbreviations().is_empty() {
        section(&mut out);
        for a in p.abbreviations() {
            let ps: Vec<&str> = a.params.iter().map(|n| n.as_ref()).collect();
            writeln!(out, "abbrev {}({}) = {}", a.name, ps.join(", "), a.body).unwrap();
        }
    }
    for m in p.environment() {
        section(&mut out);
        writeln!(out, "environment {}", m.name()).unwrap();
        module_body(&mut out, m, p.abbreviations());
    }
    for m in p.modules() {
        section(&mut out);
        writeln!(out, "module {}", m.name()).unwrap();
        module_body(&mut out, m, p.abbreviations());
    }
    out
}

/// Canonical text of a state: the universes it adds to the program's, then
/// every stored binding sorted by symbol and arguments. Bindings that only
/// name an element or a module are left implicit.
pub fn render_state(p: &DistributedProgram, s: &GlobalState) -> String {
    let mut out = String::new();
    for u in s.universes() {
        if !p.universes().iter().any(|pu| pu.name == u.name) {
            universe_line(&mut out, u);
        }
    }
    let mut first = true;
    for (loc, v) in s.bindings() {
        let implied = loc.args.is_empty()
            && (s.element(&loc.symbol) == Some(v) || *v == Value::opaque(&loc.symbol));
        if implied {
            continue;
        }
        if first && !out.is_empty() {
            out.push('\n');
        }
        first = false;
        writeln!(out, "{loc} = {v}").unwrap();
    }
    out
}
