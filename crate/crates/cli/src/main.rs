use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use airlift_core::engine::{run_episode, EpisodeConfig, DEFAULT_MAX_STEPS};
use airlift_core::io::{load_log, load_params, load_scenario, save_log, save_results, save_scenario, ExternalPolicy};
use airlift_core::model::Time;
use airlift_core::pddl::{emit_domain, emit_problem, snapshot_to_problem, DomainVariant};
use airlift_core::policies::{builtin_policy, Policy, BUILTIN_POLICIES};
use airlift_core::replay::replay;
use airlift_core::scenario::{difficulty_level, generate_scenario, ScenarioSpec, LADDER};
use airlift_core::scoring::{run_suite, score_episode, ScoreWeights, SuiteConfig};

#[derive(Parser)]
#[command(name = "airlift", version, about = "Airlift pickup-and-delivery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one scenario file.
    Generate {
        /// Generator parameters file; defaults to a difficulty level.
        #[arg(long, conflicts_with = "level")]
        params: Option<PathBuf>,
        /// Difficulty level (1-8).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=8))]
        level: u32,
        /// Overrides the seed in the parameters.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a suite of scenarios across the difficulty ladder.
    GenerateSuite {
        #[arg(long)]
        out_dir: PathBuf,
        /// Scenarios per level.
        #[arg(long, default_value_t = 1)]
        per_level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one episode and write its log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: Time,
    },
    /// Run a policy over every scenario in a directory.
    Evaluate {
        #[arg(long)]
        suite: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Wall-clock budget for the whole suite, e.g. "4h" or "90s".
        #[arg(long, value_parser = humantime::parse_duration, default_value = "4h")]
        budget: Duration,
        /// Halt once the cumulative missed fraction exceeds this.
        #[arg(long, default_value_t = 0.30)]
        missed_threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write PDDL domain and problem files for a scenario snapshot.
    ExportPddl {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        time: Time,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Variant::Verbatim)]
        variant: Variant,
    },
    /// Re-validate an episode log and print its score.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
}

#[derive(clap::Args)]
struct PolicyArgs {
    /// Built-in policy name or path to a policy executable.
    #[arg(long)]
    policy: String,
    /// Extra argument for an external policy; repeatable.
    #[arg(long = "policy-arg", allow_hyphen_values = true)]
    policy_args: Vec<String>,
    /// Seed for stochastic policies, recorded in the log.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-call reply limit, e.g. "5s".
    #[arg(long, value_parser = humantime::parse_duration)]
    timeout: Option<Duration>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    /// MOVE as originally published.
    Verbatim,
    /// MOVE without the at-end destination condition.
    Corrected,
}

impl PolicyArgs {
    fn build(&self) -> Result<Box<dyn Policy>> {
        if let Some(p) = builtin_policy(&self.policy, self.seed) {
            return Ok(p);
        }
        let path = Path::new(&self.policy);
        if !path.is_file() {
            bail!(
                "unknown policy `{}`: not one of {} and not an executable file",
                self.policy,
                BUILTIN_POLICIES.join(", ")
            );
        }
        Ok(Box::new(ExternalPolicy::new(path, self.policy_args.clone(), self.timeout)))
    }

    fn episode_config(&self, max_steps: Time) -> EpisodeConfig {
        EpisodeConfig { max_steps, seed: self.seed, policy_timeout: self.timeout, ..EpisodeConfig::default() }
    }
}

fn load_suite(dir: &Path) -> Result<Vec<ScenarioSpec>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading suite directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no scenario files in {}", dir.display());
    }
    files.iter().map(|f| load_scenario(f).with_context(|| format!("loading {}", f.display()))).collect()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { params, level, seed, out } => {
            let mut p = match params {
                Some(path) => load_params(&path).with_context(|| format!("loading {}", path.display()))?,
                None => difficulty_level(level, 0),
            };
            if let Some(seed) = seed {
                p.seed = seed;
            }
            let s = generate_scenario(&p)?;
            save_scenario(&s, &out)?;
            println!(
                "{}: {} airports, {} planes, {} initial cargo, {} scheduled events",
                out.display(),
                s.network.airports.len(),
                s.roster.len(),
                s.initial_cargo.len(),
                s.events.malfunctions.len() + s.events.spawns.len()
            );
        }
        Command::GenerateSuite { out_dir, per_level, seed } => {
            std::fs::create_dir_all(&out_dir)?;
            for level in 1..=LADDER.len() as u32 {
                for k in 0..per_level {
                    let s = generate_scenario(&difficulty_level(level, seed + u64::from(k)))?;
                    save_scenario(&s, &out_dir.join(format!("level{level}-{k:03}.json")))?;
                }
            }
            println!("wrote {} scenarios to {}", LADDER.len() as u32 * per_level, out_dir.display());
        }
        Command::Run { scenario, policy, log, max_steps } => {
            let s = load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let mut p = policy.build()?;
            let episode = run_episode(&s, p.as_mut(), &policy.episode_config(max_steps))?;
            save_log(&episode, &log)?;
            let score = score_episode(&episode, &ScoreWeights::default());
            println!(
                "{} on {}: score {:.4}, missed {:.3}, late {:.3}, cost {:.2}, end time {}",
                episode.header.policy,
                s.name,
                score.normalized,
                score.missed_fraction,
                score.late_fraction,
                score.total_flight_cost,
                episode.outcome.end_time
            );
            if let Some(reason) = &episode.outcome.aborted {
                bail!("episode aborted: {reason}");
            }
        }
        Command::Evaluate { suite, policy, budget, missed_threshold, out } => {
            let scenarios = load_suite(&suite)?;
            let mut p = policy.build()?;
            let config = SuiteConfig {
                episode: policy.episode_config(DEFAULT_MAX_STEPS),
                budget: Some(budget),
                missed_threshold: Some(missed_threshold),
                ..SuiteConfig::default()
            };
            let result = run_suite(p.as_mut(), &scenarios, &config)?;
            save_results(&result, &out)?;
            println!("{}", result.leaderboard_row());
        }
        Command::ExportPddl { scenario, time, out_dir, variant } => {
            let s = load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let variant = match variant {
                Variant::Verbatim => DomainVariant::Verbatim,
                Variant::Corrected => DomainVariant::Corrected,
            };
            let problem = emit_problem(&snapshot_to_problem(&s, time)?)?;
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("domain.pddl"), emit_domain(variant))?;
            std::fs::write(out_dir.join("problem.pddl"), problem)?;
            println!("wrote domain.pddl and problem.pddl to {}", out_dir.display());
        }
        Command::Replay { log } => {
            let episode = load_log(&log).with_context(|| format!("loading {}", log.display()))?;
            let report = replay(&episode, &ScoreWeights::default());
            if !report.is_valid() {
                for v in &report.violations {
                    eprintln!("{v}");
                }
                bail!("{} violation(s) in {}", report.violations.len(), log.display());
            }
            println!("valid; score {:.6}", report.score.normalized);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
