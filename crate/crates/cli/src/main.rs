use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avmc::agent::episode::{simulate, SeededResolver};
use avmc::agent::{AgentConfig, CollisionPreference};
use avmc::buchi::{degeneralize, translate_over};
use avmc::checker::{replay, report, verify, Status, Verdict, VerifyOptions, DEFAULT_STEP_BOUND};
use avmc::grid::{load_scenario, Scenario};
use avmc::psl::{parse_property, to_nnf, Formula};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "avmc",
    version,
    about = "Verify and simulate a BDI autonomous-vehicle agent"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mutant {
    InvertDamage,
}

#[derive(Subcommand)]
enum Command {
    /// Model-check a property against every execution of a scenario.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        property: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEP_BOUND)]
        step_bound: usize,
        #[arg(long, value_enum)]
        mutant: Option<Mutant>,
        /// Write verdict, stats and counterexample as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write the stats block.
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Run one seeded episode and print its trace.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
        #[arg(long, value_enum)]
        mutant: Option<Mutant>,
        /// Write the run as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Print the automaton for a property (or for its negation).
    Translate {
        #[arg(long)]
        property: PathBuf,
        #[arg(long)]
        negate: bool,
    },
    /// Re-execute an exported counterexample and compare it step by step.
    Replay {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
}

/// Input problems; reported with exit status 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn scenario(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn property(path: &Path) -> Result<Formula, Failure> {
    parse_property(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn config(mutant: Option<Mutant>) -> AgentConfig {
    match mutant {
        Some(Mutant::InvertDamage) => AgentConfig {
            preference: CollisionPreference::InvertDamage,
            ..AgentConfig::default()
        },
        None => AgentConfig::default(),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Verify {
            scenario: sc,
            property: prop,
            step_bound,
            mutant,
            trace_out,
            stats_out,
        } => {
            let sc = scenario(&sc)?;
            let f = property(&prop)?;
            let options = VerifyOptions {
                step_bound,
                config: config(mutant),
            };
            let verdict = verify(&sc, &f, &options)?;
            print!("{}", report(&verdict));
            println!("runtime: {:.3}s", verdict.stats.runtime.as_secs_f64());
            if let Some(path) = stats_out {
                write(&path, &verdict.stats.block())?;
            }
            if let Some(path) = trace_out {
                write(&path, &serde_json::to_string_pretty(&verdict)?)?;
            }
            Ok(match verdict.status {
                Status::Holds => 0,
                Status::Violated => 1,
                Status::Bounded => 3,
            })
        }
        Command::Simulate {
            scenario: sc,
            seed,
            max_steps,
            mutant,
            trace_out,
        } => {
            let sc = scenario(&sc)?;
            let run = simulate(
                &sc,
                &config(mutant),
                &mut SeededResolver::new(seed),
                max_steps,
            );
            print!("{run}");
            if let Some(path) = trace_out {
                write(&path, &serde_json::to_string_pretty(&run)?)?;
            }
            Ok(0)
        }
        Command::Translate {
            property: prop,
            negate,
        } => {
            let f = property(&prop)?;
            let atoms = f.atoms();
            let target = if negate { Formula::not(f) } else { f };
            let automaton = degeneralize(&translate_over(&to_nnf(&target), &atoms));
            print!("{automaton}");
            Ok(0)
        }
        Command::Replay {
            scenario: sc,
            trace,
        } => {
            let sc = scenario(&sc)?;
            let verdict: Verdict = serde_json::from_str(&read(&trace)?)
                .map_err(|e| Failure(format!("{}: {e}", trace.display())))?;
            let Some(cx) = verdict.counterexample else {
                return Err(Failure(format!(
                    "{}: no counterexample to replay",
                    trace.display()
                )));
            };
            match replay(&sc, &cx) {
                Ok(()) => {
                    println!(
                        "replay matches ({} states)",
                        cx.prefix.len() + cx.cycle.len()
                    );
                    Ok(0)
                }
                Err(e) => {
                    println!("replay failed: {e}");
                    Ok(1)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
