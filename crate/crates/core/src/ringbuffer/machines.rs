//! The four ring-buffer machines, built programmatically.

use crate::distributed::{
    Abbreviation, DistributedProgram, EAModule, GlobalState, Machine, NamedRule,
};
use crate::rule::Rule;
use crate::state::Universe;
use crate::term::Term;
use crate::value::{name, ElementKind, Value};
use crate::vocab::{FunctionSymbol, Vocabulary};

/// Buffer size and number of data values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingParams {
    pub n: usize,
    pub data: usize,
}

impl RingParams {
    /// # Panics
    /// If either size is zero.
    pub fn new(n: usize, data: usize) -> Self {
        assert!(n >= 1, "buffer size must be positive");
        assert!(data >= 1, "there must be at least one datum");
        RingParams { n, data }
    }

    pub fn n(&self) -> i64 {
        self.n as i64
    }

    pub fn data_values(&self) -> Vec<Value> {
        (0..self.data).map(|i| Value::datum(&format!("d{i}"))).collect()
    }

    /// The universes every ring machine's initial state declares.
    pub fn universes(&self) -> Vec<Universe> {
        vec![
            Universe::new("Data", Some(ElementKind::Datum), self.data_values()),
            Universe::range("Z_N", self.n()),
            Universe::range("Z_2", 2),
        ]
    }
}

pub const FRONT_END: &str = "front_end";
pub const BACK_END: &str = "back_end";
pub const INPUT_ENV: &str = "input_env";
pub const OUTPUT_ENV: &str = "output_env";
pub const INPUT_CHANNEL: &str = "input_channel";
pub const OUTPUT_CHANNEL: &str = "output_channel";

fn s(n: &str) -> Term {
    Term::sym(n)
}

fn f(n: &str, args: Vec<Term>) -> Term {
    Term::app(n, args)
}

fn me() -> Term {
    s("Me")
}

fn flip(bit: &str) -> Rule {
    Rule::assign(bit, Term::sub(Term::int(1), s(bit)))
}

fn mode_of(t: Term) -> Term {
    f("Mode", vec![t])
}

fn set_mode(t: Term, m: &str) -> Rule {
    Rule::update("Mode", vec![t], s(m))
}

fn modes(names: &[&str]) -> Universe {
    Universe::named("Modes", ElementKind::Mode, names)
}

fn base_vocabulary() -> Vocabulary {
    let mut v = Vocabulary::new();
    v.insert(FunctionSymbol::constant("N", 0));
    v
}

fn external_vocabulary() -> Vocabulary {
    let mut v = base_vocabulary();
    for x in ["InputDatum", "InSendBit", "OutReceiveBit"] {
        v.insert(FunctionSymbol::external(x, 0));
    }
    v
}

/// `p - g != N`
fn not_full() -> Term {
    Term::ne(Term::sub(s("p"), s("g")), s("N"))
}

/// `p - g != 0`
fn not_empty() -> Term {
    Term::ne(Term::sub(s("p"), s("g")), Term::int(0))
}

fn slot(counter: &str) -> Vec<Term> {
    vec![Term::modulo(s(counter), s("N"))]
}

fn input_environment_handshake() -> EAModule {
    EAModule::single(
        "InputEnvironment",
        Rule::when(
            Term::eq(s("InSendBit"), s("InReceiveBit")),
            Rule::block(vec![
                Rule::choose("v", "Data", Rule::assign("InputDatum", Term::var("v"))),
                flip("InSendBit"),
            ]),
        ),
    )
}

fn output_environment_handshake() -> EAModule {
    EAModule::single(
        "OutputEnvironment",
        Rule::when(
            Term::ne(s("OutSendBit"), s("OutReceiveBit")),
            flip("OutReceiveBit"),
        ),
    )
}

fn initial_common(p: &DistributedProgram, params: RingParams) -> GlobalState {
    let mut st = p.empty_state(params.universes());
    st.set("N", vec![], Value::Int(params.n())).unwrap();
    let d0 = params.data_values()[0].clone();
    st.set("InputDatum", vec![], d0.clone()).unwrap();
    st.set("OutputDatum", vec![], d0).unwrap();
    st
}

fn zero_bits(st: &mut GlobalState) {
    for b in ["InSendBit", "InReceiveBit", "OutSendBit", "OutReceiveBit"] {
        st.set(b, vec![], Value::Int(0)).unwrap();
    }
}

pub fn r1_program() -> DistributedProgram {
    let mut v = base_vocabulary();
    v.insert(FunctionSymbol::constant("Sender", 1));
    v.insert(FunctionSymbol::constant("Receiver", 1));
    let channel = |datum: Rule| {
        Rule::when(
            Term::and(
                Term::eq(mode_of(f("Sender", vec![me()])), s("Ready")),
                Term::eq(mode_of(f("Receiver", vec![me()])), s("Ready")),
            ),
            Rule::block(vec![
                datum,
                set_mode(f("Sender", vec![me()]), "Work"),
                set_mode(f("Receiver", vec![me()]), "Work"),
            ]),
        )
    };
    let modules = vec![
        EAModule::single(
            "InputEnvironment",
            Rule::when(
                Term::eq(mode_of(me()), s("Work")),
                Rule::block(vec![
                    Rule::choose("v", "Data", Rule::assign("InputDatum", Term::var("v"))),
                    set_mode(me(), "Ready"),
                ]),
            ),
        ),
        EAModule::single(
            "OutputEnvironment",
            Rule::when(Term::eq(mode_of(me()), s("Work")), set_mode(me(), "Ready")),
        ),
        EAModule::single(
            "InputChannel",
            channel(Rule::update("Buffer", slot("p"), s("InputDatum"))),
        ),
        EAModule::single(
            "OutputChannel",
            channel(Rule::assign("OutputDatum", f("Buffer", slot("g")))),
        ),
        EAModule::new(
            "BuffFrontEnd",
            vec![
                NamedRule::named("FrontWait", wait_rule(not_full())),
                NamedRule::named("FrontWork", work_rule("p")),
            ],
        ),
        EAModule::new(
            "BuffBackEnd",
            vec![
                NamedRule::named("BackWait", wait_rule(not_empty())),
                NamedRule::named("BackWork", work_rule("g")),
            ],
        ),
    ];
    DistributedProgram::new(v, modules)
        .expect("R1 is well formed")
        .with_universes(vec![modes(&["Wait", "Ready", "Work"])])
}

fn wait_rule(cond: Term) -> Rule {
    Rule::when(
        Term::and(Term::eq(mode_of(me()), s("Wait")), cond),
        set_mode(me(), "Ready"),
    )
}

fn work_rule(counter: &str) -> Rule {
    Rule::when(
        Term::eq(mode_of(me()), s("Work")),
        Rule::block(vec![
            Rule::assign(counter, Term::add(s(counter), Term::int(1))),
            set_mode(me(), "Wait"),
        ]),
    )
}

pub fn build_r1(params: RingParams) -> Machine {
    let p = r1_program();
    let mut st = initial_common(&p, params);
    let a = Value::agent;
    for (agent, module) in [
        (INPUT_ENV, "InputEnvironment"),
        (OUTPUT_ENV, "OutputEnvironment"),
        (INPUT_CHANNEL, "InputChannel"),
        (OUTPUT_CHANNEL, "OutputChannel"),
        (FRONT_END, "BuffFrontEnd"),
        (BACK_END, "BuffBackEnd"),
    ] {
        p.assign(&mut st, a(agent), module);
    }
    st.add_universe(Universe::new(
        "SendersAndReceivers",
        Some(ElementKind::Agent),
        [INPUT_ENV, OUTPUT_ENV, FRONT_END, BACK_END].map(a).to_vec(),
    ));
    st.set("Sender", vec![a(INPUT_CHANNEL)], a(INPUT_ENV)).unwrap();
    st.set("Receiver", vec![a(INPUT_CHANNEL)], a(FRONT_END)).unwrap();
    st.set("Sender", vec![a(OUTPUT_CHANNEL)], a(BACK_END)).unwrap();
    st.set("Receiver", vec![a(OUTPUT_CHANNEL)], a(OUTPUT_ENV)).unwrap();
    st.set("p", vec![], Value::Int(0)).unwrap();
    st.set("g", vec![], Value::Int(0)).unwrap();
    for (agent, m) in [
        (FRONT_END, "Wait"),
        (BACK_END, "Wait"),
        (INPUT_ENV, "Work"),
        (OUTPUT_ENV, "Ready"),
    ] {
        st.set("Mode", vec![a(agent)], Value::mode(m)).unwrap();
    }
    Machine::new("R1", p, st)
}

pub fn r2_program() -> DistributedProgram {
    let modules = vec![
        input_environment_handshake(),
        output_environment_handshake(),
        EAModule::new(
            "BuffFrontEnd",
            vec![
                NamedRule::named("FrontWait", wait_rule(not_full())),
                NamedRule::named(
                    "FrontCommunicate",
                    Rule::when(
                        Term::and(
                            Term::eq(mode_of(me()), s("Ready")),
                            Term::ne(s("InSendBit"), s("InReceiveBit")),
                        ),
                        Rule::block(vec![
                            Rule::update("Buffer", slot("p"), s("InputDatum")),
                            set_mode(me(), "Work"),
                            flip("InReceiveBit"),
                        ]),
                    ),
                ),
                NamedRule::named("FrontWork", work_rule("p")),
            ],
        ),
        EAModule::new(
            "BuffBackEnd",
            vec![
                NamedRule::named("BackWait", wait_rule(not_empty())),
                NamedRule::named(
                    "BackCommunicate",
                    Rule::when(
                        Term::and(
                            Term::eq(mode_of(me()), s("Ready")),
                            Term::eq(s("OutSendBit"), s("OutReceiveBit")),
                        ),
                        Rule::block(vec![
                            Rule::assign("OutputDatum", f("Buffer", slot("g"))),
                            set_mode(me(), "Work"),
                            flip("OutSendBit"),
                        ]),
                    ),
                ),
                NamedRule::named("BackWork", work_rule("g")),
            ],
        ),
    ];
    DistributedProgram::new(base_vocabulary(), modules)
        .expect("R2 is well formed")
        .with_universes(vec![modes(&["Wait", "Ready", "Work"])])
}

pub fn build_r2(params: RingParams) -> Machine {
    let p = r2_program();
    let mut st = initial_common(&p, params);
    let a = Value::agent;
    for (agent, module) in [
        (INPUT_ENV, "InputEnvironment"),
        (OUTPUT_ENV, "OutputEnvironment"),
        (FRONT_END, "BuffFrontEnd"),
        (BACK_END, "BuffBackEnd"),
    ] {
        p.assign(&mut st, a(agent), module);
    }
    st.add_universe(Universe::new(
        "BufferAgents",
        Some(ElementKind::Agent),
        vec![a(FRONT_END), a(BACK_END)],
    ));
    st.set("p", vec![], Value::Int(0)).unwrap();
    st.set("g", vec![], Value::Int(0)).unwrap();
    zero_bits(&mut st);
    st.set("Mode", vec![a(FRONT_END)], Value::mode("Wait")).unwrap();
    st.set("Mode", vec![a(BACK_END)], Value::mode("Wait")).unwrap();
    Machine::new("R2", p, st)
}

pub fn rea_program() -> DistributedProgram {
    let modules = vec![
        EAModule::single(
            "FrontEnd",
            Rule::when(
                Term::and(not_full(), Term::ne(s("InSendBit"), s("InReceiveBit"))),
                Rule::block(vec![
                    Rule::update("Buffer", slot("p"), s("InputDatum")),
                    flip("InReceiveBit"),
                    Rule::assign("p", Term::add(s("p"), Term::int(1))),
                ]),
            ),
        ),
        EAModule::single(
            "BackEnd",
            Rule::when(
                Term::and(not_empty(), Term::eq(s("OutSendBit"), s("OutReceiveBit"))),
                Rule::block(vec![
                    Rule::assign("OutputDatum", f("Buffer", slot("g"))),
                    flip("OutSendBit"),
                    Rule::assign("g", Term::add(s("g"), Term::int(1))),
                ]),
            ),
        ),
    ];
    with_implicit_environment(
        DistributedProgram::new(external_vocabulary(), modules).expect("R_ea is well formed"),
    )
}

/// The environment of the official machines: the handshake modules of R2,
/// acting on external functions only.
fn with_implicit_environment(p: DistributedProgram) -> DistributedProgram {
    p.with_environment(vec![
        input_environment_handshake(),
        output_environment_handshake(),
    ])
    .with_typing("InputDatum", "Data")
    .with_typing("InSendBit", "Z_2")
    .with_typing("OutReceiveBit", "Z_2")
}

pub fn build_rea(params: RingParams) -> Machine {
    let p = rea_program();
    let mut st = initial_common(&p, params);
    p.assign(&mut st, Value::agent(FRONT_END), "FrontEnd");
    p.assign(&mut st, Value::agent(BACK_END), "BackEnd");
    st.set("p", vec![], Value::Int(0)).unwrap();
    st.set("g", vec![], Value::Int(0)).unwrap();
    zero_bits(&mut st);
    Machine::new("R_ea", p, st)
}

/// `[x = 0 and f(0) = f(N - 1)] or [x != 0 and f(x) != f(x - 1)]`
fn turn(counter: &str) -> Term {
    let x = || Term::var("x");
    Term::or(
        Term::and(
            Term::eq(x(), Term::int(0)),
            Term::eq(
                f(counter, vec![Term::int(0)]),
                f(counter, vec![Term::sub(s("N"), Term::int(1))]),
            ),
        ),
        Term::and(
            Term::ne(x(), Term::int(0)),
            Term::ne(
                f(counter, vec![x()]),
                f(counter, vec![Term::sub(x(), Term::int(1))]),
            ),
        ),
    )
}

pub fn cea_abbreviations() -> Vec<Abbreviation> {
    vec![
        Abbreviation {
            name: name("InputTurn"),
            params: vec![name("x")],
            body: turn("pp"),
        },
        Abbreviation {
            name: name("OutputTurn"),
            params: vec![name("x")],
            body: turn("gg"),
        },
    ]
}

pub fn cea_program() -> DistributedProgram {
    let abbrevs = cea_abbreviations();
    let input_turn = abbrevs[0].expand(&[me()]);
    let output_turn = abbrevs[1].expand(&[me()]);
    let get = Rule::when(
        Term::and(
            Term::and(Term::eq(mode_of(me()), s("Get")), input_turn),
            Term::ne(s("InSendBit"), s("InReceiveBit")),
        ),
        Rule::block(vec![
            Rule::update("Buffer", vec![me()], s("InputDatum")),
            flip("InReceiveBit"),
            Rule::update(
                "pp",
                vec![me()],
                Term::sub(Term::int(1), f("pp", vec![me()])),
            ),
            set_mode(me(), "Put"),
        ]),
    );
    let put = Rule::when(
        Term::and(
            Term::and(Term::eq(mode_of(me()), s("Put")), output_turn),
            Term::eq(s("OutSendBit"), s("OutReceiveBit")),
        ),
        Rule::block(vec![
            Rule::assign("OutputDatum", f("Buffer", vec![me()])),
            flip("OutSendBit"),
            Rule::update(
                "gg",
                vec![me()],
                Term::sub(Term::int(1), f("gg", vec![me()])),
            ),
            set_mode(me(), "Get"),
        ]),
    );
    let slot = EAModule::new(
        "Slot",
        vec![NamedRule::named("Get", get), NamedRule::named("Put", put)],
    );
    with_implicit_environment(
        DistributedProgram::new(external_vocabulary(), vec![slot])
            .expect("C_ea is well formed")
            .with_universes(vec![modes(&["Get", "Put"])])
            .with_abbreviations(abbrevs),
    )
}

pub fn build_cea(params: RingParams) -> Machine {
    let p = cea_program();
    let mut st = initial_common(&p, params);
    for i in 0..params.n() {
        let k = Value::Int(i);
        p.assign(&mut st, k.clone(), "Slot");
        st.set("pp", vec![k.clone()], Value::Int(0)).unwrap();
        st.set("gg", vec![k.clone()], Value::Int(0)).unwrap();
        st.set("Mode", vec![k], Value::mode("Get")).unwrap();
    }
    zero_bits(&mut st);
    Machine::new("C_ea", p, st)
}

/// The machine of the given short name: `r1`, `r2`, `rea` or `cea`.
pub fn build(which: &str, params: RingParams) -> Option<Machine> {
    match which {
        "r1" => Some(build_r1(params)),
        "r2" => Some(build_r2(params)),
        "rea" => Some(build_rea(params)),
        "cea" => Some(build_cea(params)),
        _ => None,
    }
}
