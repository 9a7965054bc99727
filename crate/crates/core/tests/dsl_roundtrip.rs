use ealgebra::distributed::{DistributedProgram, EAModule, NamedRule};
use ealgebra::dsl::{parse_program, render_program};
use ealgebra::state::Universe;
use ealgebra::{BinOp, Rule, Term, Vocabulary};
use proptest::prelude::*;

const OPS: [BinOp; 7] = [
    BinOp::Or,
    BinOp::And,
    BinOp::Eq,
    BinOp::Ne,
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mod,
];

fn term(vars: Vec<&'static str>) -> BoxedStrategy<Term> {
    let mut leaves: Vec<BoxedStrategy<Term>> = vec![
        (-3i64..10).prop_map(Term::int).boxed(),
        prop_oneof![Just("c"), Just("d"), Just("Me")]
            .prop_map(Term::sym)
            .boxed(),
    ];
    if !vars.is_empty() {
        leaves.push(proptest::sample::select(vars).prop_map(Term::var).boxed());
    }
    let leaf = proptest::strategy::Union::new(leaves);
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app("h", vec![a, b])),
            inner.clone().prop_map(Term::not),
            (0..OPS.len(), inner.clone(), inner).prop_map(|(i, a, b)| Term::bin(OPS[i], a, b)),
        ]
    })
    .boxed()
}

fn rule(vars: Vec<&'static str>, depth: u32, allow_choose: bool) -> BoxedStrategy<Rule> {
    let update = (
        prop_oneof![Just("x"), Just("y"), Just("f")],
        term(vars.clone()),
        term(vars.clone()),
    )
        .prop_map(|(s, a, v)| {
            if s == "f" {
                Rule::update(s, vec![a], v)
            } else {
                Rule::assign(s, v)
            }
        })
        .boxed();
    if depth == 0 {
        return update;
    }
    let next = |v: &str| {
        let mut vs = vars.clone();
        let v: &'static str = if v == "u" { "u" } else { "w" };
        if !vs.contains(&v) {
            vs.push(v);
        }
        vs
    };
    let sub = rule(vars.clone(), depth - 1, allow_choose);
    let mut options: Vec<BoxedStrategy<Rule>> = vec![
        update,
        proptest::collection::vec(sub.clone(), 0..4)
            .prop_map(Rule::block)
            .boxed(),
        (term(vars.clone()), sub.clone(), proptest::option::of(sub))
            .prop_map(|(g, t, o)| match o {
                Some(o) => Rule::when_else(g, t, o),
                None => Rule::when(g, t),
            })
            .boxed(),
        rule(next("u"), depth - 1, false)
            .prop_map(|b| Rule::for_all("u", "U", b))
            .boxed(),
    ];
    if allow_choose {
        options.push(
            rule(next("w"), depth - 1, true)
                .prop_map(|b| Rule::choose("w", "U", b))
                .boxed(),
        );
    }
    proptest::strategy::Union::new(options).boxed()
}

fn program() -> impl Strategy<Value = DistributedProgram> {
    proptest::collection::vec(
        proptest::collection::vec(proptest::option::of(rule(vec![], 3, true)), 1..3),
        1..3,
    )
    .prop_map(|mods| {
        let modules = mods
            .into_iter()
            .enumerate()
            .map(|(i, rules)| {
                let named = rules
                    .into_iter()
                    .enumerate()
                    .map(|(j, r)| {
                        NamedRule::named(&format!("R{j}"), r.unwrap_or(Rule::block(vec![])))
                    })
                    .collect();
                EAModule::new(&format!("M{i}"), named)
            })
            .collect();
        DistributedProgram::new(Vocabulary::new(), modules)
            .unwrap()
            .with_universes(vec![Universe::range("U", 3)])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_render_parse_is_parse(p in program()) {
        let text = render_program(&p);
        let first = parse_program(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?;
        let again = render_program(&first);
        let second = parse_program(&again).map_err(|d| TestCaseError::fail(format!("{d}\n{again}")))?;
        prop_assert_eq!(first, second);
    }

    #[test]
    fn rendering_preserves_generated_terms(t in term(vec![])) {
        let src = format!("module M x := {t}");
        let p = parse_program(&src).map_err(|d| TestCaseError::fail(format!("{d}\n{src}")))?;
        match p.modules()[0].rule() {
            Rule::Update { value, .. } => prop_assert_eq!(value, &t),
            other => prop_assert!(false, "{other:?}"),
        }
    }
}
