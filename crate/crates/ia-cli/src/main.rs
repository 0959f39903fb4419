//! `ia`: generate, solve, check, census and benchmark individuals/activities
//! matching problems.

mod bench;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ia_core::criteria::{self, Property, SocialRule, DEFAULT_STABILITY_GUARD};
use ia_core::dist;
use ia_core::engine::{self, Mechanism};
use ia_core::generate::{generate_random, CapacityRule};
use ia_core::io;
use ia_core::model::{validate_matching, IAProblem};
use ia_core::oracle::{self, DEFAULT_ENUMERATION_GUARD};

/// Environment variable overriding the exhaustive-enumeration guard
/// (maximum number of individuals).
const ENUM_GUARD_VAR: &str = "IA_ENUM_GUARD";

#[derive(Parser)]
#[command(
    name = "ia",
    version,
    about = "Coalition formation between individuals and capacitated activities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Utilitarian,
    Egalitarian,
}

impl From<RuleArg> for SocialRule {
    fn from(arg: RuleArg) -> Self {
        match arg {
            RuleArg::Utilitarian => SocialRule::Utilitarian,
            RuleArg::Egalitarian => SocialRule::Egalitarian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Selective,
    Inclusive,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random problem instance.
    Generate {
        /// Number of individuals (at least 2).
        #[arg(short = 'm', long)]
        individuals: usize,
        /// Number of activities (at least 1).
        #[arg(short = 'n', long)]
        activities: usize,
        #[arg(long)]
        seed: u64,
        /// Fixed per-activity capacity; default is ceil(m / n).
        #[arg(long)]
        capacity: Option<u32>,
        /// Output problem file.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solve a problem with a clearing-house mechanism.
    Solve {
        problem: PathBuf,
        #[arg(long, value_enum)]
        mechanism: MechanismArg,
        #[arg(long, value_enum, default_value = "utilitarian")]
        rule: RuleArg,
        /// Selective only: exclude at most one member per proposal instead
        /// of re-optimizing over all subgroups.
        #[arg(long)]
        approx: bool,
        /// Execute as asynchronous message-passing agents.
        #[arg(long)]
        distributed: bool,
        /// Scheduler seed for --distributed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output matching file (stdout when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Write the step trace (or, with --distributed, the message log)
        /// as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a matching against the stability/efficiency/cohesion lattice.
    Check {
        problem: PathBuf,
        matching: PathBuf,
        /// Comma-separated properties among ir,ns,is,cis,sc,cs,scs,p,po.
        /// Default: everything that fits the guards.
        #[arg(long)]
        properties: Option<String>,
        /// Run the exponential checks regardless of instance size.
        #[arg(long)]
        force: bool,
    },
    /// Enumerate every sound matching and print the property census.
    Census {
        problem: PathBuf,
        /// Emit the one-row CSV (with header) instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Sweep generated instances across algorithms and emit CSV records.
    Bench(bench::BenchArgs),
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            individuals,
            activities,
            seed,
            capacity,
            out,
        } => generate(individuals, activities, seed, capacity, &out),
        Command::Solve {
            problem,
            mechanism,
            rule,
            approx,
            distributed,
            seed,
            out,
            trace,
        } => solve(
            &problem,
            mechanism,
            rule.into(),
            approx,
            distributed,
            seed,
            out.as_deref(),
            trace.as_deref(),
        ),
        Command::Check {
            problem,
            matching,
            properties,
            force,
        } => check(&problem, &matching, properties.as_deref(), force),
        Command::Census { problem, csv } => census(&problem, csv),
        Command::Bench(args) => bench::run(args),
    }
}

fn enumeration_guard() -> Result<usize> {
    match std::env::var(ENUM_GUARD_VAR) {
        Ok(text) => text
            .parse()
            .with_context(|| format!("{ENUM_GUARD_VAR} must be an integer, got {text:?}")),
        Err(_) => Ok(DEFAULT_ENUMERATION_GUARD),
    }
}

fn read_problem(path: &Path) -> Result<IAProblem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read problem file {}", path.display()))?;
    io::parse_problem(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn generate(m: usize, n: usize, seed: u64, capacity: Option<u32>, out: &Path) -> Result<()> {
    let rule = match capacity {
        Some(c) => CapacityRule::Fixed(c),
        None => CapacityRule::EvenSplit,
    };
    let problem = generate_random(m, n, seed, rule)?;
    std::fs::write(out, io::serialize_problem(&problem))
        .with_context(|| format!("cannot write {}", out.display()))?;
    let capacities: Vec<u32> = problem.activities().map(|a| problem.capacity(a)).collect();
    println!(
        "wrote {} (m={m}, n={n}, capacities={capacities:?}, seed={seed})",
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    problem_path: &Path,
    mechanism: MechanismArg,
    rule: SocialRule,
    approx: bool,
    distributed: bool,
    seed: u64,
    out: Option<&Path>,
    trace: Option<&Path>,
) -> Result<()> {
    let problem = read_problem(problem_path)?;
    let mechanism = match mechanism {
        MechanismArg::Selective => Mechanism::Selective {
            approximation: approx,
        },
        MechanismArg::Inclusive => Mechanism::Inclusive,
    };

    let started = Instant::now();
    let (matching, trace_text) = if distributed {
        let outcome = dist::solve_distributed(&problem, mechanism, rule, seed)?;
        let log = dist::log_to_json_lines(&problem, &outcome.log);
        (outcome.matching, log)
    } else {
        let result = engine::solve(&problem, mechanism, rule)?;
        let text = result.trace.to_json_lines(&problem);
        (result.matching, text)
    };
    let runtime = started.elapsed();

    let utilitarian = criteria::utilitarian_welfare(&problem, &matching)?;
    let egalitarian = criteria::egalitarian_welfare(&problem, &matching)?;
    println!("mechanism: {mechanism}{}", if distributed { " (distributed)" } else { "" });
    println!("U(M) = {utilitarian}");
    println!("E(M) = {egalitarian}");
    println!("runtime_ms = {}", runtime.as_secs_f64() * 1e3);

    let serialized = io::serialize_matching(&problem, &matching);
    match out {
        Some(path) => std::fs::write(path, serialized)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{serialized}"),
    }
    if let Some(path) = trace {
        std::fs::write(path, trace_text)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn check(
    problem_path: &Path,
    matching_path: &Path,
    properties: Option<&str>,
    force: bool,
) -> Result<()> {
    let problem = read_problem(problem_path)?;
    let text = std::fs::read_to_string(matching_path)
        .with_context(|| format!("cannot read matching file {}", matching_path.display()))?;
    let matching = io::parse_matching(&text, &problem)
        .with_context(|| format!("cannot parse {}", matching_path.display()))?;

    // Soundness gates every property.
    let validation = validate_matching(&problem, &matching)?;
    if !validation.is_sound() {
        let detail: Vec<String> = validation
            .oversubscribed
            .iter()
            .map(|&(a, count)| {
                format!(
                    "{} holds {count} of {}",
                    problem.activity_id(a),
                    problem.capacity(a)
                )
            })
            .collect();
        bail!("matching is unsound: {}", detail.join(", "));
    }

    let enum_guard = if force { usize::MAX } else { enumeration_guard()? };
    let stability_guard = if force {
        usize::MAX
    } else {
        DEFAULT_STABILITY_GUARD
    };

    let requested: Vec<Property> = match properties {
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|tag| !tag.is_empty())
            .map(|tag| {
                Property::from_tag(tag)
                    .ok_or_else(|| anyhow::anyhow!("unknown property {tag:?}"))
            })
            .collect::<Result<_>>()?,
        None => Property::ALL
            .into_iter()
            .filter(|p| match p {
                Property::Cs | Property::Scs | Property::P => problem.m() <= stability_guard,
                Property::Po => problem.m() <= enum_guard,
                _ => true,
            })
            .collect(),
    };

    let mut report = criteria::evaluate(&problem, &matching, &requested, stability_guard)?;
    if requested.contains(&Property::Po) {
        report.pareto_optimal = Some(oracle::is_pareto_optimal(&problem, &matching, enum_guard)?);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&report.to_json(&problem))?
    );
    Ok(())
}

fn census(problem_path: &Path, as_csv: bool) -> Result<()> {
    let problem = read_problem(problem_path)?;
    let census = oracle::census(&problem, enumeration_guard()?)?;
    if as_csv {
        println!("{}", oracle::Census::csv_header());
        println!("{}", census.csv_row());
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&census.to_json(&problem))?
        );
    }
    Ok(())
}

/// Folds parts into one deterministic derived seed (splitmix64 steps).
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for &part in parts {
        let mut z = state ^ part;
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}
