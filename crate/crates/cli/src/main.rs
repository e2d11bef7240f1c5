//! Command-line front end: scenario ingestion, run enumeration, formula
//! evaluation, condition checking, and report emission.
//!
//! Exit codes are a stable contract: 0 when every requested condition passes
//! (or the probed formula holds), 1 on any failure, 2 on configuration
//! errors such as unreadable files, parse errors, or bad flags.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stabcheck::adversary::{enumerate_runs, Scenario, ScenarioEcho};
use stabcheck::checker::{agreement_value, verify_theorem, BroadcasterMode};
use stabcheck::formula::parse;
use stabcheck::model::InterpretedSystem;
use stabcheck::protocol::Strategy;
use stabcheck::semantics::{eval, eval_run, eval_system, explain, Point};

#[derive(Parser)]
#[command(name = "stabcheck", version, about = "Simulate round-based message passing under message adversaries and check stabilizing-agreement conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML; see the README for the schema)
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's adversarial horizon
    #[arg(long)]
    horizon: Option<u32>,
    /// Override the scenario's fair-tail burn-in rounds
    #[arg(long)]
    burn_in: Option<u32>,
    /// Override the value selection strategy: min | max | custom:<v,v,...>
    #[arg(long)]
    strategy: Option<String>,
    /// Override the enumeration budget (points)
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the system, check all conditions, and verify the
    /// sufficient-condition implication
    Check {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Broadcaster condition reading: per-run witness (lenient) or one
        /// system-wide agent (strict)
        #[arg(long, default_value = "lenient")]
        mode: BroadcasterMode,
        /// Write the machine-readable report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a formula at a point, over a run, or over the whole system
    Eval {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Formula in the concrete syntax, e.g. "K 1 init(2,1)"
        formula: String,
        /// Run id (enumeration index); omit to quantify over all runs
        #[arg(long)]
        run: Option<usize>,
        /// Time; omit to quantify over all times of the run
        #[arg(long)]
        t: Option<u32>,
        /// Print subformula verdicts and indistinguishability class sizes
        #[arg(long)]
        trace: bool,
    },
    /// Enumerate all runs and write their coordinates and outcomes
    Enumerate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Write the run listing here instead of stdout
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rebuild one run and print its round-by-round knowledge trace
    Replay {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Run id (enumeration index)
        #[arg(long)]
        run: usize,
    },
}

enum CliError {
    Config(String),
    Failure(String),
}

impl CliError {
    fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.scenario.display())))?;
    let mut scenario = Scenario::from_toml_str(&text).map_err(CliError::config)?;
    if let Some(h) = args.horizon {
        scenario.horizon = h;
    }
    if let Some(b) = args.burn_in {
        scenario.burn_in = b;
    }
    if let Some(s) = &args.strategy {
        scenario.strategy = s.parse::<Strategy>().map_err(CliError::config)?;
        scenario.validate().map_err(CliError::config)?;
    }
    if let Some(budget) = args.budget {
        scenario.budget = budget;
    }
    Ok(scenario)
}

fn build_system(args: &ScenarioArgs) -> Result<(InterpretedSystem, u64), CliError> {
    let scenario = load_scenario(args)?;
    let started = Instant::now();
    let system = enumerate_runs(&scenario).map_err(CliError::config)?;
    Ok((system, started.elapsed().as_millis() as u64))
}

fn run_check(args: &ScenarioArgs, mode: BroadcasterMode, report_path: Option<&PathBuf>) -> Result<(), CliError> {
    let (system, build_ms) = build_system(args)?;
    println!(
        "{} runs, {} points, mode {mode}",
        system.run_count(),
        system.point_count()
    );
    let mut report = match verify_theorem(&system, mode) {
        Ok(report) => report,
        Err(refutation) => {
            eprintln!("{refutation}");
            return Err(CliError::Failure(format!(
                "conclusion '{}' fails although all hypotheses hold",
                refutation.failed
            )));
        }
    };
    report.timings_ms.build_ms = build_ms;
    for verdict in &report.conditions {
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        match &verdict.witness {
            Some(w) => println!(
                "{status}  {:<26} witness: run {} input {:?} t {:?}",
                verdict.id.key(),
                w.run_index,
                w.input,
                w.time
            ),
            None => println!("{status}  {}", verdict.id.key()),
        }
    }
    println!(
        "theorem: hypotheses {}, conclusions {}",
        if report.theorem.hypotheses_pass { "pass" } else { "fail" },
        match report.theorem.conclusions_pass {
            Some(true) => "pass".to_string(),
            Some(false) => "fail".to_string(),
            None => "not asserted".to_string(),
        }
    );
    if let Some(path) = report_path {
        fs::write(path, report.to_json_pretty())
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        println!("report written to {}", path.display());
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Failure("one or more conditions fail".into()))
    }
}

fn run_eval(
    args: &ScenarioArgs,
    formula_text: &str,
    run: Option<usize>,
    t: Option<u32>,
    trace: bool,
) -> Result<(), CliError> {
    let (system, _) = build_system(args)?;
    let formula = parse(formula_text, system.n_agents()).map_err(CliError::config)?;
    if t.is_some() && run.is_none() {
        return Err(CliError::Config("--t requires --run".into()));
    }
    if let Some(run) = run {
        if run >= system.run_count() {
            return Err(CliError::Config(format!(
                "run {run} out of range, system has {} runs",
                system.run_count()
            )));
        }
    }
    let verdict = match (run, t) {
        (Some(run), Some(t)) => {
            let point = Point { run, time: t };
            let holds = eval(&system, point, &formula).map_err(CliError::config)?;
            if trace {
                for line in explain(&system, point, &formula).map_err(CliError::config)? {
                    let class = line
                        .class_size
                        .map(|s| format!("  [class size {s}]"))
                        .unwrap_or_default();
                    println!(
                        "{}{}  {}{class}",
                        "  ".repeat(line.depth),
                        if line.verdict { "true " } else { "false" },
                        line.formula
                    );
                }
            }
            holds
        }
        (Some(run), None) => eval_run(&system, run, &formula).map_err(CliError::config)?,
        (None, _) => {
            let v = eval_system(&system, &formula).map_err(CliError::config)?;
            if let Some(w) = v.witness {
                println!("first failing point: run {}, t {}", w.run, w.time);
            }
            v.holds
        }
    };
    println!("{verdict}");
    if verdict {
        Ok(())
    } else {
        Err(CliError::Failure("formula does not hold".into()))
    }
}

fn run_enumerate(args: &ScenarioArgs, report_path: Option<&PathBuf>) -> Result<(), CliError> {
    let (system, _) = build_system(args)?;
    let runs: Vec<_> = (0..system.run_count())
        .map(|idx| {
            let run = &system.runs()[idx];
            json!({
                "id": idx,
                "input": run.input().values().iter().map(|v| v.index()).collect::<Vec<_>>(),
                "schedule": run.schedule().rounds().iter().map(|p| {
                    p.edges().map(|&(s, r)| (s.index(), r.index())).collect::<Vec<_>>()
                }).collect::<Vec<_>>(),
                "fixpoint_time": run.fixpoint_time(),
                "agreement_value": agreement_value(&system, idx).map(|v| v.index()),
            })
        })
        .collect();
    let doc = json!({
        "schema_version": 1,
        "scenario": ScenarioEcho::from(system.scenario()),
        "run_count": system.run_count(),
        "runs": runs,
    });
    let text = serde_json::to_string_pretty(&doc).expect("serialization is infallible");
    match report_path {
        Some(path) => {
            fs::write(path, text)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            println!("{} runs written to {}", system.run_count(), path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run_replay(args: &ScenarioArgs, run_idx: usize) -> Result<(), CliError> {
    let (system, _) = build_system(args)?;
    if run_idx >= system.run_count() {
        return Err(CliError::Config(format!(
            "run {run_idx} out of range, system has {} runs",
            system.run_count()
        )));
    }
    let run = &system.runs()[run_idx];
    println!(
        "run {run_idx}: input {:?}, fixpoint at t={}",
        run.input().values().iter().map(|v| v.index()).collect::<Vec<_>>(),
        run.fixpoint_time()
    );
    for t in system.times() {
        if t == 0 {
            println!("t=0  initial");
        } else if (t as usize) <= run.schedule().len() {
            let drops: Vec<String> = run
                .schedule()
                .round(t)
                .edges()
                .map(|&(s, r)| format!("{s}->{r}"))
                .collect();
            println!("t={t}  round {t} drops [{}]", drops.join(", "));
        } else {
            println!("t={t}  tail round");
        }
        for a in system.agents() {
            let p = Point { run: run_idx, time: t };
            let known = system.v_set(a, p);
            let mutual = system
                .v_star_set(a, p)
                .map(|m| m.to_string())
                .unwrap_or_else(|| "-".into());
            let choice = system
                .choice(a, p)
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into());
            println!("     agent {a}: knows [{known}]  mutual [{mutual}]  chooses {choice}");
        }
    }
    match agreement_value(&system, run_idx) {
        Some(v) => println!("agreed value: {v}"),
        None => println!("agreed value: none"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { scenario, mode, report } => run_check(scenario, *mode, report.as_ref()),
        Command::Eval { scenario, formula, run, t, trace } => {
            run_eval(scenario, formula, *run, *t, *trace)
        }
        Command::Enumerate { scenario, report } => run_enumerate(scenario, report.as_ref()),
        Command::Replay { scenario, run } => run_replay(scenario, *run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
