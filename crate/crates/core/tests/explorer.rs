use std::collections::BTreeSet;

use ealgebra::distributed::{fire_agent, step, EnvDelta, Move};
use ealgebra::equivalence::Congruence;
use ealgebra::explorer::*;
use ealgebra::ringbuffer::*;
use ealgebra::Value;

fn truncated_at_depth(g: &TransitionGraph) -> bool {
    g.truncation() == Some(Truncation::MaxDepth)
}

#[test]
fn single_slot_column_machine_closes() {
    let m = build_cea(RingParams::new(1, 1));
    let g = explore(&m.program, &m.initial, &Congruence::identity(), &EnvStrategy::Free, Bounds::default()).unwrap();
    assert!(g.is_complete());
    // Mode, pp, gg and four bits are two-valued; Buffer and the two data
    // registers hold d0 or undef.
    assert!(g.node_count() <= 2 * 2 * 2 * 16 * 2 * 2 * 2, "{}", g.node_count());
    assert!(g.node_count() > 1);
}

#[test]
fn row_machine_counters_grow_without_bound() {
    let m = build_rea(RingParams::new(10, 1));
    let id = Congruence::identity();
    let g = explore(&m.program, &m.initial, &id, &EnvStrategy::Free, Bounds::depth(10)).unwrap();
    assert!(truncated_at_depth(&g));
    let max_p = g
        .nodes()
        .iter()
        .filter_map(|n| n.state.read("p", &[]).as_int())
        .max()
        .unwrap();
    assert_eq!(max_p, 10);
    let smaller = explore(&m.program, &m.initial, &id, &EnvStrategy::Free, Bounds::depth(8)).unwrap();
    assert!(smaller.node_count() < g.node_count());
}

#[test]
fn row_machine_quotient_closes() {
    let params = RingParams::new(2, 2);
    let m = build_rea(params);
    let g = explore(&m.program, &m.initial, &Congruence::ring_r(2), &EnvStrategy::Free, Bounds::default()).unwrap();
    assert!(g.is_complete());
    assert!(g.nodes().iter().all(|n| {
        let gv = n.state.read("g", &[]).as_int().unwrap();
        (0..4).contains(&gv)
    }));
}

#[test]
fn node_bound_truncates() {
    let m = build_rea(RingParams::new(2, 2));
    let b = Bounds {
        max_nodes: 5,
        max_depth: 64,
    };
    let g = explore(&m.program, &m.initial, &Congruence::identity(), &EnvStrategy::Free, b).unwrap();
    assert_eq!(g.node_count(), 5);
    assert_eq!(g.truncation(), Some(Truncation::MaxNodes));
}

#[test]
fn depth_zero_has_one_empty_run() {
    let m = build_rea(RingParams::new(2, 2));
    let runs = enumerate_runs(&m.program, &m.initial, &EnvStrategy::Free, 0).unwrap();
    assert_eq!(runs.len(), 1);
    assert!(runs[0].is_empty());
}

#[test]
fn first_move_of_the_row_machine_is_the_front_end() {
    let m = build_rea(RingParams::new(2, 2));
    let runs = enumerate_runs(&m.program, &m.initial, &EnvStrategy::Free, 1).unwrap();
    let agents: BTreeSet<Value> = runs
        .iter()
        .filter(|r| r.len() == 1)
        .map(|r| r.moves()[0].agent.clone())
        .collect();
    assert_eq!(agents, BTreeSet::from([Value::agent(FRONT_END)]));
    // One input move per datum the environment may offer.
    assert_eq!(runs.len(), 1 + 2);
}

#[test]
fn scripted_environment_drives_get_then_put() {
    let m = build_cea(RingParams::new(1, 1));
    let script = vec![
        EnvDelta::none()
            .set("InputDatum", vec![], Value::datum("d0"))
            .set("InSendBit", vec![], Value::Int(1)),
        EnvDelta::none(),
    ];
    let runs = enumerate_runs(&m.program, &m.initial, &EnvStrategy::Scripted(script), 2).unwrap();
    let full: Vec<_> = runs.iter().filter(|r| r.len() == 2).collect();
    assert_eq!(full.len(), 1);
    let r = full[0];
    assert!(r.moves().iter().all(|mv| mv.agent == Value::Int(0)));
    let s = r.final_state();
    assert_eq!(s.read("OutputDatum", &[]), Value::datum("d0"));
    assert_eq!(s.read("Mode", &[Value::Int(0)]), Value::mode("Get"));
    assert_eq!(s.read("pp", &[Value::Int(0)]), Value::Int(1));
    assert_eq!(s.read("gg", &[Value::Int(0)]), Value::Int(1));
}

#[test]
fn buffer_bounds_hold_and_overflow_is_unreachable() {
    let params = RingParams::new(3, 2);
    let m = build_rea(params);
    let ring = Congruence::ring_r(3);
    let diff = |s: &ealgebra::State| s.read("p", &[]).as_int().unwrap() - s.read("g", &[]).as_int().unwrap();
    let ok = check_invariant(&m.program, &m.initial, &ring, &EnvStrategy::Free, Bounds::default(), |s| {
        (0..=3).contains(&diff(s))
    })
    .unwrap();
    assert!(matches!(ok, InvariantOutcome::Holds { complete: true, .. }));
    let never = check_invariant(&m.program, &m.initial, &ring, &EnvStrategy::Free, Bounds::default(), |s| diff(s) != 4)
        .unwrap();
    assert!(never.holds());
}

#[test]
fn witness_for_a_first_input_is_one_move() {
    let m = build_rea(RingParams::new(2, 2));
    let out = check_invariant(
        &m.program,
        &m.initial,
        &Congruence::identity(),
        &EnvStrategy::Free,
        Bounds::depth(4),
        |s| s.read("p", &[]).as_int() < Some(1),
    )
    .unwrap();
    match out {
        InvariantOutcome::Violated { path, state } => {
            assert_eq!(path.len(), 1);
            assert_eq!(path[0].actor.agent, Value::agent(FRONT_END));
            assert_eq!(state.read("p", &[]), Value::Int(1));
        }
        InvariantOutcome::Holds { .. } => panic!("p = 1 is reachable"),
    }
}

#[test]
fn every_edge_replays() {
    let params = RingParams::new(2, 2);
    for (m, cong) in [
        (build_rea(params), Congruence::ring_r(2)),
        (build_cea(params), Congruence::identity()),
        (build_r1(params), Congruence::ring_r(2)),
    ] {
        let env = if m.program.environment().is_empty() { EnvStrategy::None } else { EnvStrategy::Free };
        let g = explore(&m.program, &m.initial, &cong, &env, Bounds::default()).unwrap();
        for e in g.edges() {
            let from = &g.nodes()[e.from].state;
            let pre = e.env.apply(&m.program, from).unwrap();
            let after = fire_agent(&m.program, &pre, &e.actor.agent, &e.choice, None).unwrap();
            assert_eq!(cong.canon(&after), g.nodes()[e.to].state, "{}", m.name);
            assert_eq!(step(&m.program, from, &e.actor.agent, &e.choice, &e.env).unwrap(), after);
        }
        let last = g.node_count() - 1;
        let r = g.path_run(&m.program, &m.initial, last).unwrap();
        assert_eq!(cong.canon(r.final_state()), g.nodes()[last].state);
    }
}

#[test]
fn exploration_is_deterministic() {
    let m = build_rea(RingParams::new(3, 2));
    let run = || {
        let g = explore(&m.program, &m.initial, &Congruence::ring_r(3), &EnvStrategy::Free, Bounds::default()).unwrap();
        let mut buf = Vec::new();
        g.write_jsonl(&mut buf).unwrap();
        buf
    };
    let first = run();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    assert_eq!(first, pool.install(run));
    assert_eq!(first, run());
}

#[test]
fn jsonl_export_has_nodes_then_edges() {
    let m = build_cea(RingParams::new(1, 1));
    let g = explore(&m.program, &m.initial, &Congruence::identity(), &EnvStrategy::Free, Bounds::default()).unwrap();
    let mut buf = Vec::new();
    g.write_jsonl(&mut buf).unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), g.node_count() + g.edges().len());
    assert_eq!(lines[0]["id"], 0);
    assert!(lines[0]["state"].is_string());
    let e = &lines[g.node_count()];
    for k in ["from", "agent", "choice", "env", "to"] {
        assert!(e.get(k).is_some(), "{k}");
    }
}

#[test]
fn free_environment_respects_types() {
    let params = RingParams::new(2, 2);
    let m = build_rea(params);
    let g = explore(&m.program, &m.initial, &Congruence::ring_r(2), &EnvStrategy::Free, Bounds::default()).unwrap();
    let data = params.data_values();
    for e in g.edges() {
        for (l, v) in &e.env.0 {
            match l.symbol.as_ref() {
                "InputDatum" => assert!(data.contains(v)),
                "InSendBit" | "OutReceiveBit" => assert!(matches!(v, Value::Int(0 | 1))),
                other => panic!("environment wrote {other}"),
            }
        }
    }
}

#[test]
fn unconstrained_environment_offers_every_assignment() {
    let m = build_rea(RingParams::new(1, 2));
    let deltas = env_deltas(&m.program, &m.initial, &EnvStrategy::Unconstrained, 0).unwrap();
    // Two data values and two values for each of two bits.
    assert_eq!(deltas.len(), 2 * 2 * 2);
    assert!(deltas.contains(&EnvDelta::none()));
}

#[test]
fn scripted_moves_replay_as_runs() {
    let m = build_rea(RingParams::new(2, 2));
    let moves = vec![Move::new(Value::agent(FRONT_END)).with_env(
        EnvDelta::none()
            .set("InputDatum", vec![], Value::datum("d1"))
            .set("InSendBit", vec![], Value::Int(1)),
    )];
    let r = ealgebra::distributed::Run::sequential(&m.program, m.initial.clone(), moves).unwrap();
    assert_eq!(r.final_state().read("Buffer", &[Value::Int(0)]), Value::datum("d1"));
}
