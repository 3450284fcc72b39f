use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use selfconf::config::{list_examples, named_config, run_config, ExperimentConfig, RunArtifacts};

/// Config-driven shrinking-target and recurrence experiments on self-conformal systems.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write results.csv, summary.json and config_echo.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the shipped example configs.
    List,
    /// Run a shipped example and print its summary.
    Example {
        name: String,
        /// Also write the artifacts here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_FLAGS: u8 = 3;

fn fail(code: u8, kind: &str, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message.to_string(), "exit": code }));
    ExitCode::from(code)
}

fn write_artifacts(out: &Path, a: &RunArtifacts) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("results.csv"), &a.csv)?;
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&a.summary)? + "\n")?;
    std::fs::write(out.join("config_echo.json"), serde_json::to_string_pretty(&a.echo)? + "\n")?;
    Ok(())
}

fn execute(cfg: &ExperimentConfig, threads: Option<usize>, out: Option<&Path>, print: bool) -> ExitCode {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        pool = pool.num_threads(t.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_RUNTIME, "thread_pool", e),
    };
    let artifacts = match pool.install(|| run_config(cfg)) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_RUNTIME, e.code(), e),
    };
    if let Some(out) = out {
        if let Err(e) = write_artifacts(out, &artifacts) {
            return fail(EXIT_RUNTIME, "io", e);
        }
    }
    if print {
        println!("{}", serde_json::to_string_pretty(&artifacts.summary).expect("summary serializes"));
    }
    if artifacts.over_budget() {
        return fail(
            EXIT_FLAGS,
            "flag_budget_exceeded",
            format!("flagged fraction {:e} exceeds budget {:e}", artifacts.flagged_fraction, artifacts.flag_budget),
        );
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed, threads } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_SCHEMA, "unreadable_config", format!("{}: {e}", config.display())),
            };
            let mut cfg = match ExperimentConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_SCHEMA, e.code(), e),
            };
            if let Some(s) = seed {
                cfg.experiment.seed = s;
            }
            execute(&cfg, threads, Some(&out), false)
        }
        Command::List => {
            for (name, description) in list_examples() {
                println!("{name}\t{description}");
            }
            ExitCode::SUCCESS
        }
        Command::Example { name, out, threads } => match named_config(&name) {
            Ok(cfg) => execute(&cfg, threads, out.as_deref(), true),
            Err(e) => fail(EXIT_SCHEMA, e.code(), e),
        },
    }
}
