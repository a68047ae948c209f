//! Command-line front end: validate, compose, build zone graphs, tabulate
//! quiescence, run the symbolic and brute-force conformance checkers, and
//! print span traces. Reports are JSON on stdout, diagnostics on stderr.
//! Exit codes: 0 success (or conforming), 1 conformance failure, 2 invalid
//! input.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tiocheck_core as core;
use tiocheck_core::{
    build_iolzg, check_independent_progress, check_input_enabled, classify_quiescence,
    enumerate_span_traces, export_dot, parse_model, render, CheckConfig, Iolzg, RelationMode,
    Tioa,
};

#[derive(Parser)]
#[command(
    name = "tiocheck",
    version,
    about = "Timed I/O conformance checking on labeled zone graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliRelation {
    #[value(name = "ltioco")]
    Ltioco,
    #[value(name = "tioco-delta")]
    TiocoDelta,
    #[value(name = "tioco-Delta")]
    TiocoBigDelta,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file and report structural problems.
    Validate { file: PathBuf },
    /// Compose two models and write the product.
    Compose {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build the labeled zone graph; optionally export it as DOT.
    Zonegraph {
        file: PathBuf,
        /// Clock ceiling; defaults to the model's greatest constant.
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Tabulate safe/enforced quiescence per symbolic state.
    Quiescence { file: PathBuf },
    /// Symbolic conformance check of IMPL against SPEC.
    Check {
        impl_file: PathBuf,
        spec_file: PathBuf,
        #[arg(long, value_enum, default_value = "ltioco")]
        relation: CliRelation,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Discrete brute-force conformance check of IMPL against SPEC.
    Oracle {
        impl_file: PathBuf,
        spec_file: PathBuf,
        #[arg(long, value_enum, default_value = "ltioco")]
        relation: CliRelation,
        #[arg(long, default_value_t = 6)]
        length: usize,
    },
    /// Print span traces (suspension span traces with --quiescence).
    Spantraces {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long)]
        quiescence: bool,
    },
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    command: &'static str,
    inputs: Vec<String>,
    #[serde(flatten)]
    payload: T,
    version: &'static str,
}

fn emit<T: Serialize>(command: &'static str, inputs: Vec<String>, payload: T) {
    let report = Report {
        command,
        inputs,
        payload,
        version: env!("CARGO_PKG_VERSION"),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("serialize"));
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load(path: &PathBuf) -> Result<Tioa, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_model(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn build_graph(t: &Tioa, k: Option<u64>) -> Result<Iolzg, String> {
    let k = k.unwrap_or_else(|| t.max_constant());
    build_iolzg(t, k).map_err(|e| format!("{}: {e}", t.name))
}

#[derive(Serialize)]
struct ProblemJson {
    severity: String,
    message: String,
    element: String,
}

#[derive(Serialize)]
struct ValidateJson {
    model: String,
    diagonal_free: bool,
    invariants_downward_closed: bool,
    max_constant: u64,
    tau_cycle_free: bool,
    problems: Vec<ProblemJson>,
}

fn run_validate(file: PathBuf) -> ExitCode {
    let t = match load(&file) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let report = t.validate();
    let ok = report.is_clean();
    emit(
        "validate",
        vec![file.display().to_string()],
        ValidateJson {
            model: t.name.clone(),
            diagonal_free: report.diagonal_free,
            invariants_downward_closed: report.invariants_downward_closed,
            max_constant: report.max_constant,
            tau_cycle_free: report.tau_cycle_free,
            problems: report
                .problems
                .iter()
                .map(|p| ProblemJson {
                    severity: match p.severity {
                        core::Severity::Error => "error".into(),
                        core::Severity::Warning => "warning".into(),
                    },
                    message: p.message.clone(),
                    element: p.element.clone(),
                })
                .collect(),
        },
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

#[derive(Serialize)]
struct ComposeJson {
    model: String,
    locations: usize,
    switches: usize,
    output: String,
}

fn run_compose(file1: PathBuf, file2: PathBuf, output: PathBuf) -> ExitCode {
    let (a, b) = match (load(&file1), load(&file2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let composed = match core::compose(&a, &b) {
        Ok(c) => c,
        Err(e) => return fail(format!("not composable: {e}")),
    };
    if let Err(e) = fs::write(&output, render(&composed)) {
        return fail(format!("{}: {e}", output.display()));
    }
    emit(
        "compose",
        vec![file1.display().to_string(), file2.display().to_string()],
        ComposeJson {
            model: composed.name.clone(),
            locations: composed.locations.len(),
            switches: composed.switches.len(),
            output: output.display().to_string(),
        },
    );
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct ZonegraphJson {
    model: String,
    ceiling: u64,
    states: usize,
    edges: usize,
    input_enabled: bool,
    independent_progress: bool,
    dot: Option<String>,
}

fn run_zonegraph(file: PathBuf, k: Option<u64>, dot: Option<PathBuf>) -> ExitCode {
    let t = match load(&file) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let g = match build_graph(&t, k) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let dot_path = dot.map(|p| {
        let text = export_dot(&g);
        (p, text)
    });
    if let Some((p, text)) = &dot_path {
        if let Err(e) = fs::write(p, text) {
            return fail(format!("{}: {e}", p.display()));
        }
    }
    let input_enabled = check_input_enabled(&g, true).map(|r| r.enabled);
    let progress = check_independent_progress(&g).map(|r| r.enabled);
    match (input_enabled, progress) {
        (Ok(input_enabled), Ok(independent_progress)) => {
            emit(
                "zonegraph",
                vec![file.display().to_string()],
                ZonegraphJson {
                    model: t.name.clone(),
                    ceiling: g.ceiling,
                    states: g.states.len(),
                    edges: g.edges.len(),
                    input_enabled,
                    independent_progress,
                    dot: dot_path.map(|(p, _)| p.display().to_string()),
                },
            );
            ExitCode::SUCCESS
        }
        (Err(e), _) | (_, Err(e)) => fail(e),
    }
}

#[derive(Serialize)]
struct QuiescenceRow {
    location: String,
    zone: String,
    safe: bool,
    enforced: bool,
}

#[derive(Serialize)]
struct QuiescenceJson {
    model: String,
    states: Vec<QuiescenceRow>,
}

fn run_quiescence(file: PathBuf) -> ExitCode {
    let t = match load(&file) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let g = match build_graph(&t, None) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let mut rows = Vec::new();
    for s in &g.states {
        let q = match classify_quiescence(s, &g) {
            Ok(q) => q,
            Err(e) => return fail(e),
        };
        rows.push(QuiescenceRow {
            location: g.tioa().locations[s.location].name.clone(),
            zone: s.zone.render_constraints(),
            safe: q.safe,
            enforced: q.enforced,
        });
    }
    rows.sort_by(|a, b| (&a.location, &a.zone).cmp(&(&b.location, &b.zone)));
    emit(
        "quiescence",
        vec![file.display().to_string()],
        QuiescenceJson {
            model: t.name.clone(),
            states: rows,
        },
    );
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct WitnessJson {
    trace: String,
    offending: String,
    spec_out: Vec<String>,
}

#[derive(Serialize)]
struct CheckJson {
    relation: String,
    depth: usize,
    verdict: String,
    witness: Option<WitnessJson>,
    warnings: Vec<String>,
    states_explored: usize,
    traces_expanded: usize,
}

fn run_check(
    impl_file: PathBuf,
    spec_file: PathBuf,
    relation: CliRelation,
    depth: usize,
) -> ExitCode {
    let mode = match relation {
        CliRelation::Ltioco => RelationMode::Ltioco,
        CliRelation::TiocoDelta => RelationMode::TiocoDelta,
        CliRelation::TiocoBigDelta => {
            return fail("tioco-Delta is available in the oracle only");
        }
    };
    let (im, sp) = match (load(&impl_file), load(&spec_file)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let (gi, gs) = match (build_graph(&im, None), build_graph(&sp, None)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let cfg = CheckConfig {
        depth,
        relation: mode,
    };
    let verdict = match core::check(&gi, &gs, &cfg) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    eprint!("{}", core::explain(&verdict));
    emit(
        "check",
        vec![
            impl_file.display().to_string(),
            spec_file.display().to_string(),
        ],
        CheckJson {
            relation: match mode {
                RelationMode::Ltioco => "ltioco".into(),
                RelationMode::TiocoDelta => "tioco-delta".into(),
            },
            depth,
            verdict: if verdict.pass {
                "pass".into()
            } else {
                "fail".into()
            },
            witness: verdict.witness.as_ref().map(|w| WitnessJson {
                trace: w.trace.to_string(),
                offending: w.offending.to_string(),
                spec_out: w.spec_out.entries.iter().map(|e| e.to_string()).collect(),
            }),
            warnings: verdict.warnings.clone(),
            states_explored: verdict.stats.states_explored,
            traces_expanded: verdict.stats.traces_expanded,
        },
    );
    if verdict.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[derive(Serialize)]
struct OracleJson {
    relation: String,
    length: usize,
    verdict: String,
    witness: Option<WitnessJson>,
}

fn run_oracle(
    impl_file: PathBuf,
    spec_file: PathBuf,
    relation: CliRelation,
    length: usize,
) -> ExitCode {
    let (im, sp) = match (load(&impl_file), load(&spec_file)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let cfg = core::OracleConfig::default();
    let (ti, ts) = match core::build_pair(&im, &sp, &cfg) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let result = match relation {
        CliRelation::Ltioco => core::check_ltioco_s(&ti, &ts, length),
        CliRelation::TiocoDelta => core::check_tioco_delta(&ti, &ts, length),
        CliRelation::TiocoBigDelta => core::check_tioco_big_delta(&ti, &ts, length),
    };
    let verdict = match result {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    emit(
        "oracle",
        vec![
            impl_file.display().to_string(),
            spec_file.display().to_string(),
        ],
        OracleJson {
            relation: match relation {
                CliRelation::Ltioco => "ltioco".into(),
                CliRelation::TiocoDelta => "tioco-delta".into(),
                CliRelation::TiocoBigDelta => "tioco-Delta".into(),
            },
            length,
            verdict: if verdict.pass {
                "pass".into()
            } else {
                "fail".into()
            },
            witness: verdict.witness.as_ref().map(|(trace, missing)| WitnessJson {
                trace: trace.to_string(),
                offending: missing.clone(),
                spec_out: Vec::new(),
            }),
        },
    );
    if verdict.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[derive(Serialize)]
struct SpantracesJson {
    model: String,
    depth: usize,
    quiescence: bool,
    traces: Vec<String>,
}

fn run_spantraces(file: PathBuf, depth: usize, quiescence: bool) -> ExitCode {
    let t = match load(&file) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let g = match build_graph(&t, None) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let traces = match enumerate_span_traces(&g, depth, quiescence) {
        Ok(ts) => ts,
        Err(e) => return fail(e),
    };
    let rendered: Vec<String> = traces
        .iter()
        .filter(|t| !t.steps.is_empty())
        .map(|t| t.to_string())
        .collect();
    emit(
        "spantraces",
        vec![file.display().to_string()],
        SpantracesJson {
            model: t.name.clone(),
            depth,
            quiescence,
            traces: rendered,
        },
    );
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { file } => run_validate(file),
        Command::Compose {
            file1,
            file2,
            output,
        } => run_compose(file1, file2, output),
        Command::Zonegraph { file, k, dot } => run_zonegraph(file, k, dot),
        Command::Quiescence { file } => run_quiescence(file),
        Command::Check {
            impl_file,
            spec_file,
            relation,
            depth,
        } => run_check(impl_file, spec_file, relation, depth),
        Command::Oracle {
            impl_file,
            spec_file,
            relation,
            length,
        } => run_oracle(impl_file, spec_file, relation, length),
        Command::Spantraces {
            file,
            depth,
            quiescence,
        } => run_spantraces(file, depth, quiescence),
    }
}
