//! The bench command: generate instances per (m, n) cell, run the selected
//! algorithms and append one CSV record per run.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;

use ia_core::criteria::{self, SocialRule};
use ia_core::dist;
use ia_core::engine::{self, Mechanism};
use ia_core::generate::{generate_random, CapacityRule};
use ia_core::model::{validate_matching, IAProblem, Matching};
use ia_core::oracle;

use crate::mix_seed;

const HILL_CLIMB_MAX_STEPS: usize = 100_000;

#[derive(Args)]
pub struct BenchArgs {
    /// Individual counts: "4..13" (inclusive) or "4,8,12".
    #[arg(long = "m-range")]
    m_range: String,
    /// Activity counts, same syntax.
    #[arg(long = "n-range")]
    n_range: String,
    /// Instances per (m, n) cell.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Comma-separated algorithms: selective, selective-approx, inclusive,
    /// hill-climb, oracle, dist-selective, dist-selective-approx,
    /// dist-inclusive.
    #[arg(long)]
    algorithms: String,
    #[arg(long, value_enum, default_value = "utilitarian")]
    rule: crate::RuleArg,
    /// Base seed; instance seeds are derived from (seed, m, n, index).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Algorithm {
    Selective,
    SelectiveApprox,
    Inclusive,
    HillClimb,
    Oracle,
    DistSelective,
    DistSelectiveApprox,
    DistInclusive,
}

impl Algorithm {
    fn tag(self) -> &'static str {
        match self {
            Algorithm::Selective => "selective",
            Algorithm::SelectiveApprox => "selective-approx",
            Algorithm::Inclusive => "inclusive",
            Algorithm::HillClimb => "hill-climb",
            Algorithm::Oracle => "oracle",
            Algorithm::DistSelective => "dist-selective",
            Algorithm::DistSelectiveApprox => "dist-selective-approx",
            Algorithm::DistInclusive => "dist-inclusive",
        }
    }

    fn parse(tag: &str) -> Result<Self> {
        Ok(match tag {
            "selective" => Algorithm::Selective,
            "selective-approx" => Algorithm::SelectiveApprox,
            "inclusive" => Algorithm::Inclusive,
            "hill-climb" => Algorithm::HillClimb,
            "oracle" => Algorithm::Oracle,
            "dist-selective" => Algorithm::DistSelective,
            "dist-selective-approx" => Algorithm::DistSelectiveApprox,
            "dist-inclusive" => Algorithm::DistInclusive,
            other => bail!("unknown algorithm {other:?}"),
        })
    }
}

fn parse_range(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().context("range start")?;
        let hi: usize = hi.trim().parse().context("range end")?;
        if lo > hi {
            bail!("empty range {text:?}");
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| part.trim().parse().context("range element"))
        .collect()
}

struct Record {
    m: usize,
    n: usize,
    instance_seed: u64,
    algorithm: Algorithm,
    rule: SocialRule,
    utilitarian: f64,
    egalitarian: f64,
    runtime_ms: f64,
    sound: bool,
    individually_rational: bool,
    socially_cohesive: bool,
    pareto_optimal: Option<bool>,
}

pub fn run(args: BenchArgs) -> Result<()> {
    let ms = parse_range(&args.m_range)?;
    let ns = parse_range(&args.n_range)?;
    if ms.is_empty() || ns.is_empty() || args.instances == 0 {
        bail!("empty sweep");
    }
    let algorithms: Vec<Algorithm> = args
        .algorithms
        .split(',')
        .map(str::trim)
        .filter(|tag| !tag.is_empty())
        .map(Algorithm::parse)
        .collect::<Result<_>>()?;
    if algorithms.is_empty() {
        bail!("no algorithms selected");
    }
    let rule: SocialRule = args.rule.into();
    let guard = crate::enumeration_guard()?;

    let mut writer = csv::Writer::from_path(&args.csv)
        .with_context(|| format!("cannot write {}", args.csv.display()))?;
    writer.write_record([
        "m",
        "n",
        "instance_seed",
        "algorithm",
        "rule",
        "U",
        "E",
        "runtime_ms",
        "sound",
        "ir",
        "sc",
        "po",
    ])?;

    for &n in &ns {
        for &m in &ms {
            if m < 2 {
                bail!("m must be at least 2, got {m}");
            }
            let mut sums: Vec<(Algorithm, f64, f64, f64, usize)> = algorithms
                .iter()
                .map(|&alg| (alg, 0.0, 0.0, 0.0, 0usize))
                .collect();
            for k in 0..args.instances {
                let instance_seed = mix_seed(&[args.seed, m as u64, n as u64, k as u64]);
                let problem = generate_random(m, n, instance_seed, CapacityRule::EvenSplit)?;
                for (slot, &algorithm) in algorithms.iter().enumerate() {
                    if algorithm == Algorithm::Oracle && m > guard {
                        eprintln!(
                            "warning: skipping oracle for m={m} (enumeration guard {guard})"
                        );
                        continue;
                    }
                    let record = run_one(&problem, algorithm, rule, instance_seed, guard)?;
                    let entry = &mut sums[slot];
                    entry.1 += record.utilitarian;
                    entry.2 += record.egalitarian;
                    entry.3 += record.runtime_ms;
                    entry.4 += 1;
                    write_record(&mut writer, &record)?;
                }
            }
            for &(algorithm, u, e, rt, count) in &sums {
                if count == 0 {
                    continue;
                }
                let c = count as f64;
                println!(
                    "cell m={m} n={n} {}: mean_U={:.6} mean_E={:.6} mean_runtime_ms={:.3} ({count} runs)",
                    algorithm.tag(),
                    u / c,
                    e / c,
                    rt / c,
                );
            }
        }
    }
    writer.flush()?;
    println!("wrote {}", args.csv.display());
    Ok(())
}

fn run_one(
    problem: &IAProblem,
    algorithm: Algorithm,
    rule: SocialRule,
    instance_seed: u64,
    guard: usize,
) -> Result<Record> {
    let started = Instant::now();
    let matching: Matching = match algorithm {
        Algorithm::Selective => engine::solve_selective(problem, rule, false)?.matching,
        Algorithm::SelectiveApprox => engine::solve_selective(problem, rule, true)?.matching,
        Algorithm::Inclusive => engine::solve_inclusive(problem, rule)?.matching,
        Algorithm::HillClimb => {
            engine::hill_climb(
                problem,
                rule,
                mix_seed(&[instance_seed, 1]),
                HILL_CLIMB_MAX_STEPS,
            )?
            .matching
        }
        Algorithm::Oracle => {
            let (_, optima) = oracle::exact_optimum(problem, rule, guard)?;
            optima
                .into_iter()
                .next()
                .expect("at least the trivial matching is sound")
        }
        Algorithm::DistSelective => {
            dist::solve_distributed(
                problem,
                Mechanism::Selective {
                    approximation: false,
                },
                rule,
                mix_seed(&[instance_seed, 2]),
            )?
            .matching
        }
        Algorithm::DistSelectiveApprox => {
            dist::solve_distributed(
                problem,
                Mechanism::Selective {
                    approximation: true,
                },
                rule,
                mix_seed(&[instance_seed, 2]),
            )?
            .matching
        }
        Algorithm::DistInclusive => {
            dist::solve_distributed(
                problem,
                Mechanism::Inclusive,
                rule,
                mix_seed(&[instance_seed, 2]),
            )?
            .matching
        }
    };
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

    let sound = validate_matching(problem, &matching)?.is_sound();
    let individually_rational = criteria::is_individually_rational(problem, &matching)?.holds;
    let socially_cohesive = criteria::is_socially_cohesive(problem, &matching)?.holds;
    let pareto_optimal = if problem.m() <= guard {
        Some(oracle::is_pareto_optimal(problem, &matching, guard)?.holds)
    } else {
        None
    };
    Ok(Record {
        m: problem.m(),
        n: problem.n(),
        instance_seed,
        algorithm,
        rule,
        utilitarian: criteria::utilitarian_welfare(problem, &matching)?,
        egalitarian: criteria::egalitarian_welfare(problem, &matching)?,
        runtime_ms,
        sound,
        individually_rational,
        socially_cohesive,
        pareto_optimal,
    })
}

fn write_record(writer: &mut csv::Writer<std::fs::File>, r: &Record) -> Result<()> {
    writer.write_record([
        r.m.to_string(),
        r.n.to_string(),
        r.instance_seed.to_string(),
        r.algorithm.tag().to_owned(),
        r.rule.to_string(),
        r.utilitarian.to_string(),
        r.egalitarian.to_string(),
        r.runtime_ms.to_string(),
        r.sound.to_string(),
        r.individually_rational.to_string(),
        r.socially_cohesive.to_string(),
        r.pareto_optimal.map(|b| b.to_string()).unwrap_or_default(),
    ])?;
    Ok(())
}
