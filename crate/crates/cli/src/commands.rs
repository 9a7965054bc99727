use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ealgebra::dsl::{parse_program, parse_state, render_program, render_state};
use ealgebra::equivalence::{check_lockstep, check_strict, Congruence, LockstepOptions};
use ealgebra::explorer::{explore, successors, Bounds};
use ealgebra::ringbuffer::{
    build_cea, build_rea, inequivalence_metrics, lemma_suite, pp_table, rea_cea_correspondence,
    rea_cea_map, RingMachine, RingParams, SuiteOptions,
};
use ealgebra::{DistributedProgram, GlobalState, Run};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::{Casestudy, Cli, Command, EquivArgs, ExploreArgs, InvariantArgs, RunArgs, Size};
use crate::{script, Error, Outcome};

/// Prints either the text or the JSON form of each record.
struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, text: impl Display, value: impl Serialize) {
        if self.json {
            println!("{}", serde_json::to_string(&value).expect("records serialize"));
        } else {
            println!("{text}");
        }
    }

    fn text(&self, text: impl Display) {
        if !self.json {
            println!("{text}");
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<Outcome, Error> {
    let out = Out { json: cli.json };
    match &cli.command {
        Command::Parse(a) => parse(&out, &a.file, a.program.as_deref()),
        Command::Run(a) => run(&out, a),
        Command::Explore(a) => explore_cmd(&out, a),
        Command::CheckInvariants(a) => invariants(&out, a),
        Command::CheckEquiv(a) => equiv(&out, a),
        Command::Casestudy { which } => casestudy(&out, which),
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(path.display().to_string(), e))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn load_program(path: &Path) -> Result<DistributedProgram, Error> {
    parse_program(&read(path)?).map_err(|d| Error::Parse(d.in_file(&file_name(path))))
}

fn load(program: &Path, state: &Path) -> Result<(DistributedProgram, GlobalState), Error> {
    let p = load_program(program)?;
    let s = parse_state(&read(state)?, &p).map_err(|d| Error::Parse(d.in_file(&file_name(state))))?;
    Ok((p, s))
}

fn params(size: &Size) -> RingParams {
    RingParams::new(size.n as usize, size.data_size as usize)
}

fn parse(out: &Out, file: &Path, program: Option<&Path>) -> Result<Outcome, Error> {
    let rendered = match program {
        Some(prog) => {
            let (p, s) = load(prog, file)?;
            render_state(&p, &s)
        }
        None => render_program(&load_program(file)?),
    };
    out.emit(
        rendered.trim_end(),
        json!({"file": file_name(file), "rendered": rendered}),
    );
    Ok(Outcome::Pass)
}

fn congruence(name: &str) -> Result<Congruence, Error> {
    if name == "identity" {
        return Ok(Congruence::identity());
    }
    name.strip_prefix("ring-R:")
        .and_then(|n| n.parse::<i64>().ok())
        .filter(|n| *n >= 1)
        .map(Congruence::ring_r)
        .ok_or_else(|| Error::Usage(format!("unknown congruence `{name}`; expected identity or ring-R:N")))
}

fn run(out: &Out, a: &RunArgs) -> Result<Outcome, Error> {
    let (p, init) = load(&a.file, &a.state)?;
    let env = script::strategy(&a.env, &init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut s = init.clone();
    let mut moves = Vec::new();
    for i in 0..a.steps {
        let ts = successors(&p, &s, &env, i)?;
        let Some(t) = ts.choose(&mut rng) else {
            out.emit(
                format!("{:>4}  no move is enabled", i + 1),
                json!({"step": i + 1, "deadlock": true}),
            );
            break;
        };
        let updates: Vec<String> = t.updates.iter().map(|u| format!("{} := {}", u.location, u.value)).collect();
        let choice = if t.choice.is_empty() { String::new() } else { t.choice.to_string() };
        let env_text = if t.env.is_empty() { String::new() } else { format!("  env {}", t.env) };
        out.emit(
            format!("{:>4}  {}{choice}{env_text}\n      {}", i + 1, t.actor, updates.join(", ")),
            json!({
                "step": i + 1,
                "agent": t.actor.to_string(),
                "choice": t.choice,
                "env": t.env,
                "updates": updates,
            }),
        );
        moves.push(t.to_move());
        s = t.state.clone();
    }
    let r = Run::sequential(&p, init, moves)?;
    out.emit(
        format!("final    {}", r.final_state().canonical_text()),
        json!({"steps": r.len(), "final": r.final_state().canonical_text()}),
    );
    Ok(Outcome::Pass)
}

fn explore_cmd(out: &Out, a: &ExploreArgs) -> Result<Outcome, Error> {
    let (p, init) = load(&a.file, &a.state)?;
    let env = script::strategy(&a.env, &init)?;
    let cong = congruence(&a.congruence)?;
    let bounds = Bounds {
        max_nodes: a.max_nodes,
        max_depth: a.max_depth,
    };
    let g = explore(&p, &init, &cong, &env, bounds)?;
    if let Some(path) = &a.output {
        let io_err = |e| Error::Io(file_name(path), e);
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        g.write_jsonl(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    let status = match g.truncation() {
        None => "closure complete".to_string(),
        Some(t) => format!("truncated ({})", serde_json::to_value(t).expect("serializes").as_str().unwrap_or("bounds")),
    };
    out.emit(
        format!(
            "{} configurations, {} edges, depth {} under {}: {status}",
            g.node_count(),
            g.edges().len(),
            g.max_depth(),
            cong.name()
        ),
        json!({
            "congruence": cong.name(),
            "nodes": g.node_count(),
            "edges": g.edges().len(),
            "max_depth": g.max_depth(),
            "complete": g.is_complete(),
            "truncation": g.truncation(),
        }),
    );
    Ok(Outcome::Pass)
}

fn invariants(out: &Out, a: &InvariantArgs) -> Result<Outcome, Error> {
    let machine = RingMachine::from(a.machine);
    let params = params(&a.size);
    let opts = SuiteOptions {
        run_depth: a.run_depth,
        fifo_depth: a.fifo_depth,
        ..SuiteOptions::default()
    };
    let results = lemma_suite(machine, params, opts)?;
    for l in &results {
        out.emit(l, l);
    }
    let held = results.iter().filter(|l| l.holds).count();
    out.text(format!(
        "{machine} N={} |Data|={}: {held} of {} lemmas hold",
        params.n,
        params.data,
        results.len()
    ));
    Ok(if held == results.len() { Outcome::Pass } else { Outcome::Violation })
}

fn equiv(out: &Out, a: &EquivArgs) -> Result<Outcome, Error> {
    let params = params(&a.size);
    let (rea, cea) = (build_rea(params), build_cea(params));
    let opts = LockstepOptions {
        bounds: Bounds {
            max_nodes: a.max_nodes,
            ..Bounds::default()
        },
        ..LockstepOptions::default()
    };
    let head = format!("{} vs {}, N={}, |Data|={}", rea.name, cea.name, params.n, params.data);
    let (h, corr) = (rea_cea_map(params), rea_cea_correspondence(params));
    if a.strict {
        let (d1, d2) = (a.depths[0].min(a.depths[1]), a.depths[0].max(a.depths[1]));
        let r = check_strict(&rea, &cea, &h, &corr, &opts, (d1, d2))?;
        out.emit(format!("{head}: {r}"), &r);
        return Ok(if r.is_equivalent() { Outcome::Pass } else { Outcome::Violation });
    }
    let r = check_lockstep(
        &rea,
        &cea,
        &Congruence::ring_r(params.n()),
        &Congruence::identity(),
        &h,
        &corr,
        &opts,
    )?;
    out.emit(format!("{head}: {r}"), &r);
    Ok(if r.is_equivalent() { Outcome::Pass } else { Outcome::Violation })
}

fn casestudy(out: &Out, which: &Casestudy) -> Result<Outcome, Error> {
    match which {
        Casestudy::PpTable { n, rows } => {
            let header: String = (0..*n).map(|k| format!(" {k:>2} ")).collect();
            out.text(format!("  p  {header}"));
            for row in pp_table(*n as usize, *rows) {
                out.emit(&row, &row);
            }
        }
        Casestudy::Metrics { size, depth } => {
            let params = params(size);
            for m in [RingMachine::Rea, RingMachine::Cea] {
                let r = inequivalence_metrics(m, params, *depth)?;
                let max = r.max_counter_by_depth.last().copied().unwrap_or(0);
                let configs = r.configs_by_depth.last().copied().unwrap_or(0);
                out.emit(
                    format!(
                        "{m}: {} shared locations [{}]; counters reach {max} and {configs} configurations within depth {}",
                        r.shared_count,
                        r.shared_locations.join(", "),
                        r.max_counter_by_depth.len() - 1
                    ),
                    &r,
                );
            }
        }
    }
    Ok(Outcome::Pass)
}
