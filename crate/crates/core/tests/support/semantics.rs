//! Generators for small states and rules, a nondeterministic evaluator
//! written independently of the library's, and the properties that relate
//! the two.

use std::collections::BTreeSet;

use ealgebra::rule::{choices, fire, is_consistent, update_set, update_set_with};
use ealgebra::state::Universe;
use ealgebra::value::ElementKind;
use ealgebra::{eval_term, Env, FunctionSymbol, Location, Rule, State, Term, UpdateSet, Value, Vocabulary};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

const MAX_U: usize = 4;

fn element(i: usize) -> String {
    format!("u{i}")
}

fn state(k: usize, a: i64, b: i64, f: &[i64]) -> State {
    let mut v = Vocabulary::new();
    v.insert(FunctionSymbol::dynamic("a", 0));
    v.insert(FunctionSymbol::dynamic("b", 0));
    v.insert(FunctionSymbol::dynamic("f", 1));
    let names: Vec<String> = (0..k).map(element).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut s = State::new(v, vec![Universe::named("U", ElementKind::Opaque, &refs)]);
    s.name_elements();
    s.set("a", vec![], Value::Int(a)).unwrap();
    s.set("b", vec![], Value::Int(b)).unwrap();
    for (i, x) in f.iter().take(k).enumerate() {
        s.set("f", vec![Value::opaque(&element(i))], Value::Int(*x)).unwrap();
    }
    s
}

fn term(k: usize, vars: Vec<&'static str>) -> BoxedStrategy<Term> {
    let mut leaves: Vec<BoxedStrategy<Term>> = vec![
        (0i64..3).prop_map(Term::int).boxed(),
        prop_oneof![Just("a"), Just("b")].prop_map(Term::sym).boxed(),
    ];
    if k > 0 {
        leaves.push((0..k).prop_map(|i| Term::sym(&element(i))).boxed());
    }
    if !vars.is_empty() {
        leaves.push(proptest::sample::select(vars).prop_map(Term::var).boxed());
    }
    proptest::strategy::Union::new(leaves)
        .prop_recursive(2, 6, 1, |inner| inner.prop_map(|t| Term::app("f", vec![t])))
        .boxed()
}

fn guard(k: usize, vars: Vec<&'static str>) -> BoxedStrategy<Term> {
    (term(k, vars.clone()), term(k, vars), any::<bool>())
        .prop_map(|(l, r, eq)| if eq { Term::eq(l, r) } else { Term::ne(l, r) })
        .boxed()
}

fn rule(k: usize, vars: Vec<&'static str>, depth: u32, allow_choose: bool) -> BoxedStrategy<Rule> {
    let update = (0..3usize, term(k, vars.clone()), term(k, vars.clone()))
        .prop_map(|(s, arg, v)| match s {
            0 => Rule::assign("a", v),
            1 => Rule::assign("b", v),
            _ => Rule::update("f", vec![arg], v),
        })
        .boxed();
    if depth == 0 {
        return update;
    }
    let bind = |x: &'static str| {
        let mut vs = vars.clone();
        if !vs.contains(&x) {
            vs.push(x);
        }
        vs
    };
    let sub = rule(k, vars.clone(), depth - 1, allow_choose);
    let mut options = vec![
        update,
        proptest::collection::vec(sub.clone(), 0..3)
            .prop_map(Rule::block)
            .boxed(),
        (guard(k, vars.clone()), sub.clone(), proptest::option::of(sub))
            .prop_map(|(g, t, o)| match o {
                Some(o) => Rule::when_else(g, t, o),
                None => Rule::when(g, t),
            })
            .boxed(),
        rule(k, bind("x"), depth - 1, false)
            .prop_map(|b| Rule::for_all("x", "U", b))
            .boxed(),
    ];
    if allow_choose {
        options.push(
            rule(k, bind("y"), depth - 1, true)
                .prop_map(|b| Rule::choose("y", "U", b))
                .boxed(),
        );
    }
    proptest::strategy::Union::new(options).boxed()
}

pub fn settings(allow_choose: bool) -> impl Strategy<Value = (State, Rule, Rule)> {
    (0..=MAX_U).prop_flat_map(move |k| {
        (
            -2i64..3,
            -2i64..3,
            proptest::collection::vec(0i64..3, MAX_U),
            rule(k, vec![], 3, allow_choose),
            rule(k, vec![], 2, allow_choose),
        )
            .prop_map(move |(a, b, f, r, r2)| (state(k, a, b, &f), r, r2))
    })
}

pub fn setting(allow_choose: bool) -> impl Strategy<Value = (State, Rule)> {
    settings(allow_choose).prop_map(|(s, r, _)| (s, r))
}

/// Every update set the rule can produce, by direct case analysis and
/// substitution of literals for bound variables.
fn outcomes(r: &Rule, s: &State) -> Vec<UpdateSet> {
    let env = Env::new();
    match r {
        Rule::Update { symbol, args, value } => {
            let args = args.iter().map(|t| eval_term(t, s, &env).unwrap()).collect();
            let v = eval_term(value, s, &env).unwrap();
            vec![[(Location { symbol: symbol.clone(), args }, v)].into_iter().collect()]
        }
        Rule::Block(rs) => rs.iter().fold(vec![UpdateSet::new()], |acc, r| {
            let mine = outcomes(r, s);
            acc.iter()
                .flat_map(|u| {
                    mine.iter().map(move |w| {
                        let mut x = u.clone();
                        x.union(w.clone());
                        x
                    })
                })
                .collect()
        }),
        Rule::If { guard, then, otherwise } => {
            if eval_term(guard, s, &env).unwrap() == Value::Bool(true) {
                outcomes(then, s)
            } else {
                otherwise.as_ref().map_or(vec![UpdateSet::new()], |o| outcomes(o, s))
            }
        }
        Rule::Var { var, universe, body } => {
            let es = s.universe(universe).unwrap().elements.clone();
            let block = Rule::Block(es.iter().map(|e| body.substitute(var, e)).collect());
            outcomes(&block, s)
        }
        Rule::Choose { var, universe, body } => {
            let es = s.universe(universe).unwrap().elements.clone();
            es.iter().flat_map(|e| outcomes(&body.substitute(var, e), s)).collect()
        }
    }
}

fn as_set(us: Vec<UpdateSet>) -> BTreeSet<Vec<String>> {
    us.into_iter()
        .map(|u| u.iter().map(ToString::to_string).collect())
        .collect()
}

type Checked = Result<(), TestCaseError>;

pub fn block_is_union((s, r1, r2): (State, Rule, Rule)) -> Checked {
    let mut expected = update_set(&r1, &s, &Env::new()).unwrap();
    expected.union(update_set(&r2, &s, &Env::new()).unwrap());
    let block = Rule::block(vec![r1, r2]);
    prop_assert_eq!(update_set(&block, &s, &Env::new()).unwrap(), expected);
    Ok(())
}

pub fn inconsistent_firing_changes_nothing(((s, r), x): ((State, Rule), i64)) -> Checked {
    let mut u = update_set(&r, &s, &Env::new()).unwrap();
    u.insert(Location::nullary("a"), Value::Int(x));
    u.insert(Location::nullary("a"), Value::Int(x + 1));
    prop_assert!(!is_consistent(&u));
    let fired = fire(&s, &u).unwrap();
    prop_assert!(!fired.consistent);
    prop_assert_eq!(fired.state, s);
    Ok(())
}

pub fn firing_changes_exactly_the_updated_locations((s, r): (State, Rule)) -> Checked {
    let u = update_set(&r, &s, &Env::new()).unwrap();
    if !is_consistent(&u) {
        return Ok(());
    }
    let t = fire(&s, &u).unwrap().state;
    let mut locs: BTreeSet<Location> = s.bindings().map(|(l, _)| l).collect();
    locs.extend(t.bindings().map(|(l, _)| l));
    locs.extend(u.locations().cloned());
    for l in locs {
        let expected = u
            .iter()
            .find(|up| up.location == l)
            .map_or_else(|| s.content(&l), |up| up.value.clone());
        prop_assert_eq!(t.content(&l), expected, "at {}", l);
    }
    Ok(())
}

pub fn var_rule_is_union_of_instances((s, body): (State, Rule)) -> Checked {
    let body = Rule::block(vec![body, Rule::update("f", vec![Term::var("x")], Term::sym("a"))]);
    let r = Rule::for_all("x", "U", body);
    let got = update_set(&r, &s, &Env::new()).unwrap();
    let expected = as_set(outcomes(&r, &s));
    prop_assert_eq!(expected.len(), 1);
    prop_assert_eq!(as_set(vec![got]), expected);
    Ok(())
}

pub fn choices_enumerate_every_outcome((s, r): (State, Rule)) -> Checked {
    let cs = choices(&r, &s).unwrap();
    let distinct: BTreeSet<_> = cs.iter().cloned().collect();
    prop_assert_eq!(distinct.len(), cs.len());
    let k = s.universe("U").unwrap().elements.len();
    prop_assert_eq!(cs.len(), k.pow(r.count_chooses() as u32));
    let got: Vec<UpdateSet> = cs
        .iter()
        .map(|c| update_set_with(&r, &s, &Env::new(), c).unwrap())
        .collect();
    // Resolutions range over every choose node, taken branch or not, so
    // one empty range leaves none at all.
    let expected = if k == 0 && r.count_chooses() > 0 { vec![] } else { outcomes(&r, &s) };
    prop_assert_eq!(as_set(got), as_set(expected));
    Ok(())
}
