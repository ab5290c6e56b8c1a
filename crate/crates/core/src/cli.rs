//! Command-line interface: check, simulate, emit and stats.
//!
//! Exit codes: 0 = property holds / success, 1 = counterexample found,
//! 2 = usage or input error, 3 = state-space limit exceeded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::firing::FiringSemantics;
use crate::ltl::{self, CheckError};
use crate::maude;
use crate::pnml;
use crate::state::{
    explore, successors_with, ActionLabel, Configuration, ExploreLimits, ExploreOptions,
    StateGraph, StateIdentity,
};

#[derive(Parser)]
#[command(
    name = "rpncheck",
    version,
    about = "Model checker for reconfigurable Petri nets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an LTL formula against a net and its rules
    Check(CheckArgs),
    /// Walk the successor relation pseudo-randomly
    Simulate(SimulateArgs),
    /// Write the Maude-style module files for a net and its rules
    Emit(EmitArgs),
    /// Explore the state space and print statistics
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// Net file (PNML)
    net: PathBuf,
    /// Rule files (PNML rule documents)
    rules: Vec<PathBuf>,
    /// Largest number of states to explore
    #[arg(long, default_value_t = 1_000_000)]
    max_states: usize,
    /// Depth bound for exploration (unlimited when absent)
    #[arg(long)]
    max_depth: Option<usize>,
    /// Check capacities against the pre-fire marking instead of the
    /// post-fire marking
    #[arg(long)]
    strict_capacity: bool,
    /// Identify states by relabeled net structure instead of full terms
    #[arg(long)]
    semantic_state_identity: bool,
    /// Identifier pool refill size
    #[arg(long, default_value_t = 10)]
    step_size: u64,
    /// Parallel workers for exploration (result-identical)
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Report format
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// LTL formula, e.g. "[]<> enabled"
    #[arg(long)]
    ltl: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of steps to walk
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Seed for the pseudo-random walk
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory receiving rpn.maude, rules.maude, prop.maude, net.maude
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write the line-oriented state graph here
    #[arg(long)]
    graph_out: Option<PathBuf>,
    /// Write a GraphViz rendering here
    #[arg(long)]
    dot_out: Option<PathBuf>,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Emit(args) => cmd_emit(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load(common: &CommonArgs) -> Result<(Configuration, ExploreOptions), String> {
    let net = pnml::parse_net_file(&common.net).map_err(|e| e.to_string())?;
    let mut rules = Vec::new();
    for path in &common.rules {
        rules.push(pnml::parse_rule_file(path).map_err(|e| e.to_string())?);
    }
    let config =
        Configuration::initial(net, rules, common.step_size).map_err(|e| e.to_string())?;
    let opts = ExploreOptions {
        limits: ExploreLimits { max_states: common.max_states, max_depth: common.max_depth },
        semantics: FiringSemantics { strict_capacity: common.strict_capacity },
        identity: if common.semantic_state_identity {
            StateIdentity::Semantic
        } else {
            StateIdentity::Term
        },
        workers: common.workers,
    };
    Ok((config, opts))
}

#[derive(Serialize)]
struct MarkingEntry {
    place: u64,
    label: String,
    tokens: u64,
}

fn marking_entries(config: &Configuration) -> Vec<MarkingEntry> {
    config
        .net()
        .marking()
        .iter()
        .map(|(p, tokens)| MarkingEntry {
            place: p.0,
            label: config.net().place(p).map(|pl| pl.label.clone()).unwrap_or_default(),
            tokens,
        })
        .collect()
}

#[derive(Serialize)]
struct StepReport {
    marking: Vec<MarkingEntry>,
    action: Option<String>,
}

#[derive(Serialize)]
struct LassoReport {
    prefix: Vec<StepReport>,
    cycle: Vec<StepReport>,
    deadlock_tail: bool,
}

#[derive(Serialize)]
struct CheckReport {
    formula: String,
    holds: bool,
    states: usize,
    edges: usize,
    deadlocks: usize,
    elapsed_ms: u128,
    counterexample: Option<LassoReport>,
}

fn lasso_report(lasso: &ltl::Lasso) -> LassoReport {
    let step = |s: &ltl::Step| StepReport {
        marking: marking_entries(&s.config),
        action: s.action.as_ref().map(|a| a.to_string()),
    };
    LassoReport {
        prefix: lasso.prefix.iter().map(step).collect(),
        cycle: lasso.cycle.iter().map(step).collect(),
        deadlock_tail: lasso.deadlock_tail,
    }
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode, String> {
    let (config, opts) = load(&args.common)?;
    let formula = ltl::parse_formula(&args.ltl).map_err(|e| e.to_string())?;
    ltl::validate_formula(&formula, &config).map_err(|e| e.to_string())?;

    let started = Instant::now();
    let graph = explore(&config, &opts);
    let verdict = match ltl::model_check_graph(&graph, &formula) {
        Ok(verdict) => verdict,
        Err(CheckError::StateSpaceExceeded { states }) => {
            eprintln!("state space exceeded: {states} states explored, graph truncated");
            return Ok(ExitCode::from(3));
        }
        Err(other) => return Err(other.to_string()),
    };
    let elapsed_ms = started.elapsed().as_millis();

    match args.common.format {
        Format::Text => {
            print!("{}", maude::render_verdict(&verdict));
            eprintln!(
                "checked {} states, {} edges, {} deadlocks in {} ms",
                graph.len(),
                graph.edge_count(),
                graph.deadlocks().len(),
                elapsed_ms
            );
        }
        Format::Json => {
            let report = CheckReport {
                formula: formula.to_string(),
                holds: verdict.holds(),
                states: graph.len(),
                edges: graph.edge_count(),
                deadlocks: graph.deadlocks().len(),
                elapsed_ms,
                counterexample: verdict.counterexample().map(lasso_report),
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
    }
    Ok(if verdict.holds() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct SimulateReport {
    seed: u64,
    steps: Vec<SimulateStep>,
    deadlock: bool,
}

#[derive(Serialize)]
struct SimulateStep {
    action: String,
    marking: Vec<MarkingEntry>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, String> {
    let (config, opts) = load(&args.common)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut current = config;
    let mut steps = Vec::new();
    let mut deadlock = false;

    for _ in 0..args.steps {
        let succ = successors_with(&current, opts.semantics);
        if succ.is_empty() {
            deadlock = true;
            break;
        }
        let (action, next) = succ.into_iter().choose(&mut rng).expect("non-empty");
        steps.push((action, next.clone()));
        current = next;
    }

    match args.common.format {
        Format::Text => {
            println!("initial marking{{ {} }}", initial_summary(&args.common)?);
            for (i, (action, config)) in steps.iter().enumerate() {
                println!("step {}: {} -> marking{{ {} }}", i + 1, action, config.marking_summary());
            }
            if deadlock {
                println!("deadlock reached after {} steps", steps.len());
            }
        }
        Format::Json => {
            let report = SimulateReport {
                seed: args.seed,
                steps: steps
                    .iter()
                    .map(|(action, config)| SimulateStep {
                        action: action.to_string(),
                        marking: marking_entries(config),
                    })
                    .collect(),
                deadlock,
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn initial_summary(common: &CommonArgs) -> Result<String, String> {
    let (config, _) = load(common)?;
    Ok(config.marking_summary())
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| format!("cannot move {} into place: {e}", tmp.display()))
}

fn cmd_emit(args: EmitArgs) -> Result<ExitCode, String> {
    let (config, _) = load(&args.common)?;
    let modules = maude::emit_modules(&config);
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| format!("cannot create {}: {e}", args.out_dir.display()))?;
    for (name, contents) in [
        ("rpn.maude", &modules.rpn),
        ("rules.maude", &modules.rules),
        ("prop.maude", &modules.prop),
        ("net.maude", &modules.net),
    ] {
        let path = args.out_dir.join(name);
        write_atomic(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct StatsReport {
    states: usize,
    edges: usize,
    deadlocks: usize,
    truncated: bool,
    elapsed_ms: u128,
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode, String> {
    let (config, opts) = load(&args.common)?;
    let started = Instant::now();
    let graph = explore(&config, &opts);
    let elapsed_ms = started.elapsed().as_millis();

    if let Some(path) = &args.graph_out {
        write_atomic(path, &graph.to_text())?;
    }
    if let Some(path) = &args.dot_out {
        write_atomic(path, &graph.to_dot())?;
    }

    match args.common.format {
        Format::Text => {
            println!("states {}", graph.len());
            println!("edges {}", graph.edge_count());
            println!("deadlocks {}", graph.deadlocks().len());
            println!("truncated {}", graph.truncated());
            println!("elapsed_ms {elapsed_ms}");
        }
        Format::Json => {
            let report = StatsReport {
                states: graph.len(),
                edges: graph.edge_count(),
                deadlocks: graph.deadlocks().len(),
                truncated: graph.truncated(),
                elapsed_ms,
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
    }
    Ok(if graph.truncated() { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

/// Action profile of a graph, used by reports and tests.
pub fn action_census(graph: &StateGraph) -> BTreeMap<String, usize> {
    let mut census = BTreeMap::new();
    for node in graph.nodes() {
        for (label, _) in &node.edges {
            let key = match label {
                ActionLabel::Fire(_) => "fire".to_string(),
                ActionLabel::Rule { name, .. } => format!("rule {name}"),
            };
            *census.entry(key).or_insert(0) += 1;
        }
    }
    census
}
