use ealgebra::dsl::{parse_program, parse_state, render_program, render_state};
use ealgebra::ringbuffer::{
    build_cea, build_r1, build_r2, build_rea, cea_program, r1_program, r2_program, rea_program,
    RingParams,
};
use ealgebra::{name, Value};

const R1: &str = include_str!("../resources/r1.ea");
const R2: &str = include_str!("../resources/r2.ea");
const REA: &str = include_str!("../resources/rea.ea");
const CEA: &str = include_str!("../resources/cea.ea");
const REA_N4: &str = include_str!("../resources/rea-n4.eas");
const CEA_N4: &str = include_str!("../resources/cea-n4.eas");
const CEA_GOLDEN: &str = include_str!("../resources/cea.golden.ea");

#[test]
fn rea_has_two_modules_and_nine_dynamic_symbols() {
    let p = parse_program(REA).unwrap();
    let names: Vec<_> = p.modules().iter().map(|m| m.name().to_string()).collect();
    assert_eq!(names, ["FrontEnd", "BackEnd"]);
    let mut syms: Vec<String> = p
        .mentioned_symbols()
        .into_iter()
        .filter(|s| s.as_ref() != "N" && s.as_ref() != "Me")
        .map(|s| s.to_string())
        .collect();
    syms.sort();
    assert_eq!(
        syms,
        [
            "Buffer",
            "InReceiveBit",
            "InSendBit",
            "InputDatum",
            "OutReceiveBit",
            "OutSendBit",
            "OutputDatum",
            "g",
            "p"
        ]
    );
}

#[test]
fn transcriptions_match_builders() {
    assert_eq!(parse_program(R1).unwrap(), r1_program());
    assert_eq!(parse_program(R2).unwrap(), r2_program());
    assert_eq!(parse_program(REA).unwrap(), rea_program());
    assert_eq!(parse_program(CEA).unwrap(), cea_program());
}

#[test]
fn state_transcriptions_match_builders() {
    let params = RingParams::new(4, 2);
    let rea = build_rea(params);
    assert_eq!(parse_state(REA_N4, &rea.program).unwrap(), rea.initial);
    let cea = build_cea(params);
    assert_eq!(parse_state(CEA_N4, &cea.program).unwrap(), cea.initial);
}

#[test]
fn rendered_states_reparse() {
    let params = RingParams::new(3, 2);
    for m in [build_r1(params), build_r2(params), build_rea(params), build_cea(params)] {
        let text = render_state(&m.program, &m.initial);
        let back = parse_state(&text, &m.program)
            .unwrap_or_else(|d| panic!("{}: {d}\n{text}", m.name));
        assert_eq!(back, m.initial, "{}", m.name);
    }
}

#[test]
fn render_reparses_to_equal_program() {
    for src in [R1, R2, REA, CEA] {
        let p = parse_program(src).unwrap();
        let text = render_program(&p);
        let q = parse_program(&text).unwrap_or_else(|d| panic!("{d}\n{text}"));
        assert_eq!(p, q);
        assert_eq!(render_program(&q), text);
    }
}

#[test]
fn cea_render_matches_golden_file() {
    let text = render_program(&cea_program());
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/resources/cea.golden.ea");
        std::fs::write(path, &text).unwrap();
        return;
    }
    assert_eq!(text, CEA_GOLDEN);
}

#[test]
fn single_update_module() {
    let p = parse_program("module M if true then x := 1 endif").unwrap();
    assert_eq!(p.modules().len(), 1);
    assert_eq!(p.modules()[0].name().as_ref(), "M");
    assert!(p.vocabulary().get("x").is_some());
}

#[test]
fn unclosed_if_reports_end_of_input() {
    let src = "module M\n  if true then\n    x := 1\n";
    let d = parse_program(src).unwrap_err();
    assert_eq!((d.span.line, d.span.col), (4, 1));
    assert!(d.message.contains("endif"), "{}", d.message);
    assert!(d.to_string().starts_with("<input>:4:1: "));
    assert!(d.in_file("m.ea").to_string().starts_with("m.ea:4:1: "));
}

#[test]
fn inconsistent_arity_is_rejected() {
    let d = parse_program("module M\n  f(1) := f\n").unwrap_err();
    assert!(d.message.contains("arity"), "{}", d.message);
    assert_eq!(d.span.line, 2);
}

#[test]
fn declared_arity_must_agree_with_use() {
    let d = parse_program("function f/2\nmodule M f(1) := 0").unwrap_err();
    assert!(d.message.contains("arity"), "{}", d.message);
}

#[test]
fn duplicate_module_is_rejected() {
    let d = parse_program("module M x := 1\nmodule M x := 2").unwrap_err();
    assert!(d.message.contains("M"), "{}", d.message);
    assert_eq!(d.span.line, 2);
}

#[test]
fn unknown_element_in_state() {
    let p = rea_program();
    let d = parse_state("universe Data : datum = {d0}\nInputDatum = d7\n", &p).unwrap_err();
    assert_eq!(d.span.line, 2);
}

#[test]
fn state_must_declare_universes_the_program_ranges_over() {
    let p = rea_program();
    let d = parse_state("p = 0\n", &p).unwrap_err();
    assert!(d.message.contains("undeclared universe"), "{}", d.message);
}

#[test]
fn typed_external_outside_its_universe() {
    let p = rea_program();
    let src = "universe Data : datum = {d0}\nuniverse Z_2 = {0, 1}\nInSendBit = 5\n";
    let d = parse_state(src, &p).unwrap_err();
    assert!(d.message.contains("Z_2"), "{}", d.message);
    assert_eq!(d.span.line, 3);
}

#[test]
fn small_state() {
    let p = parse_program("module M\n  if x = 0 then x := 1 endif").unwrap();
    let src = "universe Agents : agent = {a}\nMod(a) = M\nx = 0\n";
    let s = parse_state(src, &p).unwrap();
    assert_eq!(s.read("x", &[]), Value::Int(0));
    assert_eq!(p.agents(&s), vec![Value::agent("a")]);
    assert_eq!(p.module_of(&s, &Value::agent("a")).unwrap().name(), &name("M"));
}
