use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use kso_core::numtheory::{self, extract_order, NumError, OrderSearch};
use kso_core::orthorep::{
    self, inner_angle, verify_representation, OrthoRep, RVector, ReprError, SolverConfig,
};
use kso_core::qrng::{self, BitSequence};
use kso_core::qsim::{self, BlackBoxFunction, OrderFindingCircuit, Partition};
use kso_core::valuations::{self, enumerate_states, indefiniteness_certificate, relational_query};
use kso_core::{dot, rng, AtomId, Logic, LogicError};

use crate::{
    Cli, CliError, Command, Format, GlobalOpts, LogicCmd, Outcome, ReprCmd, RngCmd, SimCmd,
    StatesCmd, Tolerances,
};

type CmdResult = Result<Outcome, CliError>;

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn json_outcome(value: &impl Serialize, passed: bool) -> CmdResult {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(Outcome {
        data: text.into_bytes(),
        passed,
    })
}

fn require_json(g: &GlobalOpts, what: &str) -> Result<(), CliError> {
    if g.format == Format::Csv {
        return Err(usage(format!("{what} has no CSV output")));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_logic(path: &Path) -> Result<Logic, CliError> {
    kso_core::parse_logic(&read_text(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn atom(logic: &Logic, name: &str) -> Result<AtomId, CliError> {
    let id = AtomId::from(name);
    if logic.contains_atom(&id) {
        Ok(id)
    } else {
        Err(usage(format!("unknown atom {name}")))
    }
}

pub fn run(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    match &cli.command {
        Command::Logic(cmd) => run_logic(g, cmd),
        Command::States(cmd) => run_states(g, cmd),
        Command::Repr(cmd) => run_repr(g, cmd),
        Command::Sim(cmd) => run_sim(g, cmd),
        Command::Rng(cmd) => run_rng(g, cmd),
    }
}

fn run_logic(g: &GlobalOpts, cmd: &LogicCmd) -> CmdResult {
    require_json(g, "logic")?;
    match cmd {
        LogicCmd::Validate { logic } => match kso_core::parse_logic(&read_text(logic)?) {
            Ok(l) => json_outcome(
                &json!({
                    "valid": true,
                    "dimension": l.dimension(),
                    "atoms": l.atoms().len(),
                    "contexts": l.contexts().len(),
                    "degree_census": l.degree_census(),
                }),
                true,
            ),
            Err(LogicError::Invalid(issues)) => {
                for issue in &issues {
                    eprintln!("{}: {issue}", logic.display());
                }
                json_outcome(&json!({ "valid": false, "issues": issues }), false)
            }
            Err(e) => Err(usage(format!("{}: {e}", logic.display()))),
        },
        LogicCmd::ExportDot { logic } => {
            let l = load_logic(logic)?;
            let text = dot::export_greechie_dot(&l).map_err(usage)?;
            Ok(Outcome {
                data: text.into_bytes(),
                passed: true,
            })
        }
    }
}

fn parse_hypothesis(text: &str) -> Result<(&str, bool), CliError> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| usage(format!("hypothesis {text:?} is not ATOM=BOOL")))?;
    let value = match value.trim() {
        "true" | "1" => true,
        "false" | "0" => false,
        other => return Err(usage(format!("{other:?} is not a truth value"))),
    };
    Ok((name.trim(), value))
}

fn run_states(g: &GlobalOpts, cmd: &StatesCmd) -> CmdResult {
    match cmd {
        StatesCmd::Enumerate { logic } => {
            let l = load_logic(logic)?;
            let states = enumerate_states(&l);
            eprintln!("{} two-valued states", states.len());
            match g.format {
                Format::Csv => Ok(Outcome {
                    data: valuations::states_to_csv(&states, l.atoms()).into_bytes(),
                    passed: true,
                }),
                Format::Json => json_outcome(&states, true),
            }
        }
        StatesCmd::Query {
            logic,
            hypothesis,
            conclusion,
        } => {
            require_json(g, "states query")?;
            let l = load_logic(logic)?;
            let (name, value) = parse_hypothesis(hypothesis)?;
            let hyp = atom(&l, name)?;
            let concl = atom(&l, conclusion)?;
            let verdict = relational_query(&l, (&hyp, value), &concl).map_err(usage)?;
            json_outcome(
                &json!({
                    "hypothesis": { "atom": hyp, "value": value },
                    "conclusion": concl,
                    "verdict": verdict.kind,
                    "witness_count": verdict.witness_count,
                }),
                true,
            )
        }
        StatesCmd::Certify {
            logic,
            prepared,
            target,
        } => {
            require_json(g, "states certify")?;
            let l = load_logic(logic)?;
            let prepared = atom(&l, prepared)?;
            let target = atom(&l, target)?;
            let cert = indefiniteness_certificate(&l, &prepared, &target).map_err(usage)?;
            eprintln!("{}", cert.summary);
            eprintln!("note: {}", cert.banner);
            json_outcome(&cert, cert.certified)
        }
    }
}

fn solver_config(g: &GlobalOpts, tol: &Tolerances) -> SolverConfig {
    SolverConfig {
        tol_orth: tol.tol_orth,
        tol_norm: tol.tol_norm,
        sep_min: tol.sep_min,
        seed: g.seed,
        ..SolverConfig::default()
    }
}

fn parse_pin(text: &str) -> Result<(AtomId, RVector), CliError> {
    let (name, comps) = text
        .split_once('=')
        .ok_or_else(|| usage(format!("pin {text:?} is not ATOM=V1,V2,..")))?;
    let v = RVector::parse_list(comps).map_err(usage)?;
    Ok((AtomId::from(name.trim()), v))
}

/// Angles between every pair of pinned atoms, in units of radians and of pi.
fn pinned_angles(rep: &OrthoRep, pins: &BTreeMap<AtomId, RVector>) -> Result<Vec<Value>, CliError> {
    let names: Vec<&AtomId> = pins.keys().collect();
    let mut out = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (u, v) = (rep.get(a), rep.get(b));
            let (Some(u), Some(v)) = (u, v) else {
                continue;
            };
            let angle = inner_angle(u, v).map_err(|e| CliError::Internal(e.to_string()))?;
            out.push(json!({
                "atoms": [a, b],
                "inner_product": u.dot(v),
                "angle": angle,
                "angle_over_pi": angle / PI,
            }));
        }
    }
    Ok(out)
}

fn run_repr(g: &GlobalOpts, cmd: &ReprCmd) -> CmdResult {
    require_json(g, "repr")?;
    match cmd {
        ReprCmd::Verify {
            logic,
            vectors,
            tol,
        } => {
            let l = load_logic(logic)?;
            let rep = OrthoRep::from_vector_file(&read_text(vectors)?)
                .map_err(|e| usage(format!("{}: {e}", vectors.display())))?;
            let cfg = solver_config(g, tol);
            cfg.check().map_err(usage)?;
            let report = verify_representation(&l, &rep, &cfg).map_err(usage)?;
            for v in &report.violations {
                eprintln!(
                    "violation: {:?} {:?} measured {:e} bound {:e}",
                    v.kind, v.atoms, v.measured, v.bound
                );
            }
            let ok = report.is_ok();
            json_outcome(&json!({ "verified": ok, "report": report }), ok)
        }
        ReprCmd::Solve {
            logic,
            pins,
            restarts,
            max_iters,
            tol,
            vectors_out,
        } => {
            let l = load_logic(logic)?;
            let mut cfg = solver_config(g, tol);
            cfg.restarts = *restarts;
            cfg.max_iters = *max_iters;
            for p in pins {
                let (a, v) = parse_pin(p)?;
                cfg.pins.insert(a, v);
            }
            match orthorep::solve_representation(&l, &cfg) {
                Ok(sol) => {
                    eprintln!(
                        "seed {}: restart {} verified after {} iterations",
                        g.seed, sol.restart, sol.iterations
                    );
                    if let Some(path) = vectors_out {
                        fs::write(path, sol.rep.to_vector_file())
                            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
                    }
                    json_outcome(
                        &json!({
                            "seed": g.seed,
                            "found": true,
                            "restart": sol.restart,
                            "restarts_allowed": cfg.restarts,
                            "iterations": sol.iterations,
                            "residual": sol.residual,
                            "pinned_angles": pinned_angles(&sol.rep, &cfg.pins)?,
                            "report": sol.report,
                            "vectors": sol.rep.vectors(),
                        }),
                        true,
                    )
                }
                Err(ReprError::NotFound(fail)) => {
                    eprintln!(
                        "seed {}: no verified representation in {} restarts (best residual {:e}); \
                         this does not prove none exists",
                        g.seed, fail.restarts, fail.best_residual
                    );
                    json_outcome(
                        &json!({
                            "seed": g.seed,
                            "found": false,
                            "restarts_allowed": fail.restarts,
                            "best_residual": fail.best_residual,
                            "best_report": fail.best_report,
                        }),
                        false,
                    )
                }
                Err(e) => Err(usage(e)),
            }
        }
    }
}

#[derive(Serialize)]
struct Shot {
    measured: u64,
    bits: String,
    probability: f64,
    order: Option<u64>,
}

fn run_sim(g: &GlobalOpts, cmd: &SimCmd) -> CmdResult {
    require_json(g, "sim")?;
    match cmd {
        SimCmd::Deutsch { function } => {
            let partition = Partition::deutsch_parity();
            let indices: Vec<usize> = match function {
                Some(name) => {
                    let i = name
                        .strip_prefix('f')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|&i| i < 4)
                        .ok_or_else(|| {
                            usage(format!("unknown function {name:?}, expected f0..f3"))
                        })?;
                    vec![i]
                }
                None => (0..4).collect(),
            };
            let mut results = Vec::new();
            for i in indices {
                let f = BlackBoxFunction::one_bit(i).expect("index checked above");
                let out =
                    qsim::deutsch_decide(&f).map_err(|e| CliError::Internal(e.to_string()))?;
                let class_index = partition.class_of(f.name());
                results.push(json!({
                    "function": out.function,
                    "class": out.class,
                    "partition_class": class_index,
                    "outcome": out.outcome,
                    "probability": out.probability,
                    "oracle_calls": out.oracle_calls,
                }));
            }
            if function.is_some() {
                json_outcome(&results[0], true)
            } else {
                json_outcome(&results, true)
            }
        }
        SimCmd::Order {
            base,
            modulus,
            shots,
            register_bits,
        } => {
            let m = register_bits.unwrap_or_else(|| numtheory::index_bits_for(*modulus));
            let circuit = OrderFindingCircuit::prepare(*base, *modulus, m).map_err(usage)?;
            let mut rng = rng::seeded(g.seed);
            let mut search = OrderSearch::new(*base, *modulus, m);
            let mut overall = None;
            let mut runs = Vec::with_capacity(*shots);
            for _ in 0..*shots {
                let run = circuit
                    .sample(&mut rng)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                let order = extract_order(run.measured, m, *modulus, *base);
                let combined = search.observe(run.measured);
                overall = overall.or(combined);
                runs.push(Shot {
                    measured: run.measured,
                    bits: run.bits,
                    probability: run.probability,
                    order,
                });
            }
            let successes = runs.iter().filter(|r| r.order.is_some()).count();
            eprintln!(
                "seed {}: order recovered in {successes} of {shots} shots",
                g.seed
            );
            json_outcome(
                &json!({
                    "seed": g.seed,
                    "base": base,
                    "modulus": modulus,
                    "index_bits": m,
                    "work_bits": circuit.work_bits(),
                    "shots": runs,
                    "successes": successes,
                    "order": overall,
                }),
                overall.is_some(),
            )
        }
        SimCmd::Shor { n } => match numtheory::shor_factor(*n, g.seed) {
            Ok(report) => {
                eprintln!(
                    "seed {}: {} = {} x {}",
                    g.seed,
                    n,
                    report.factor.unwrap_or(0),
                    report.cofactor.unwrap_or(0)
                );
                json_outcome(&shor_json(g.seed, &report), true)
            }
            Err(NumError::RetriesExhausted(report)) => {
                eprintln!("seed {}: no factor of {n} found", g.seed);
                json_outcome(&shor_json(g.seed, &report), false)
            }
            Err(e) => Err(usage(e)),
        },
    }
}

fn shor_json(seed: u64, r: &numtheory::FactorReport) -> Value {
    json!({
        "seed": seed,
        "n": r.n,
        "factor": r.factor,
        "cofactor": r.cofactor,
        "x": r.x,
        "order": r.order,
        "index_bits": r.index_bits,
        "attempts": r.attempts,
    })
}

fn run_rng(g: &GlobalOpts, cmd: &RngCmd) -> CmdResult {
    require_json(g, "rng")?;
    match cmd {
        RngCmd::Generate {
            bits,
            prep,
            target,
            ascii,
        } => {
            let (default_prep, default_target) = qrng::figure1_pair();
            let parse = |text: &Option<String>, default: RVector| match text {
                Some(t) => RVector::parse_list(t).map_err(usage),
                None => Ok(default),
            };
            let prep = parse(prep, default_prep)?;
            let target = parse(target, default_target)?;
            let p = qrng::click_probability(&prep, &target).map_err(usage)?;
            let seq = qrng::generate_bits(&prep, &target, *bits, g.seed).map_err(usage)?;
            eprintln!(
                "seed {}: {} bits, P(1) = {p}, ones fraction {}",
                g.seed,
                seq.len(),
                if seq.is_empty() {
                    0.0
                } else {
                    seq.ones() as f64 / seq.len() as f64
                }
            );
            let data = if *ascii {
                let mut s = seq.to_ascii();
                s.push('\n');
                s.into_bytes()
            } else {
                seq.to_packed()
            };
            Ok(Outcome { data, passed: true })
        }
        RngCmd::Test { input, all } => {
            let bytes = fs::read(input)
                .map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;
            let seq = BitSequence::from_bytes(&bytes)
                .map_err(|e| usage(format!("{}: {e}", input.display())))?;
            let borel = qrng::borel_normality_test(&seq).map_err(usage)?;
            let mut passed = borel.passed;
            let mut out = json!({
                "length": seq.len(),
                "ones": seq.ones(),
                "borel": borel,
            });
            if *all {
                let aux = qrng::monobit_and_runs_tests(&seq).map_err(usage)?;
                passed &= aux.passed;
                out["monobit"] = serde_json::to_value(&aux.monobit)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                out["runs"] = serde_json::to_value(&aux.runs)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
            }
            out["passed"] = json!(passed);
            eprintln!(
                "{}",
                if passed {
                    "all tests passed"
                } else {
                    "test failure"
                }
            );
            json_outcome(&out, passed)
        }
    }
}
