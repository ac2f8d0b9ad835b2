//! Command-line driver: config parsing, pipeline dispatch and artifact output.

pub mod artifacts;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use agar_core::AgarError;
use clap::{Args, Parser, Subcommand};

use crate::commands::{Cache, Outcome};
use crate::config::{Command, ConfigError, ExperimentConfig, RawConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "agar", version, about = "World/regulator contrast experiments and micro-universe checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run coupled ON and OFF legs and dump transcripts.
    Simulate(CommonArgs),
    /// Codelength of a bitstring file.
    Estimate(CommonArgs),
    /// Paired ON/OFF complexity contrast over seeds.
    Contrast(CommonArgs),
    /// Exhaustive micro-universe enumeration index.
    Enumerate(CommonArgs),
    /// Block complexity table from the enumeration.
    Ctm(CommonArgs),
    /// XOR synergy demonstration.
    Synergy(CommonArgs),
    /// Exact inequality checks on the micro-universe.
    Verify(CommonArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Config file of `key = value` lines with `[section]` headers.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Seeds as `A..B` (inclusive) or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads; never changes results.
    #[arg(long)]
    threads: Option<String>,
    /// Interface steps per episode (N).
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    world: Option<String>,
    #[arg(long)]
    regulator: Option<String>,
    #[arg(long)]
    estimator: Option<String>,
    /// Program length bound L for enumerate, verify and ctm.
    #[arg(long)]
    max_len: Option<String>,
    /// Step budget S for enumerate, verify and ctm.
    #[arg(long)]
    steps: Option<String>,
    /// Input bitstring file for estimate.
    #[arg(long)]
    input: Option<String>,
    /// Override any config key, e.g. `--set world.tau=40`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Cmd {
    fn split(self) -> (Command, CommonArgs) {
        match self {
            Cmd::Simulate(a) => (Command::Simulate, a),
            Cmd::Estimate(a) => (Command::Estimate, a),
            Cmd::Contrast(a) => (Command::Contrast, a),
            Cmd::Enumerate(a) => (Command::Enumerate, a),
            Cmd::Ctm(a) => (Command::Ctm, a),
            Cmd::Synergy(a) => (Command::Synergy, a),
            Cmd::Verify(a) => (Command::Verify, a),
        }
    }
}

fn apply_flags(raw: &mut RawConfig, command: Command, a: &CommonArgs) -> Vec<ConfigError> {
    let (len_key, steps_key) = match command {
        Command::Verify => ("verify.max_len", "verify.steps"),
        Command::Ctm => ("estimator.max_program_bits", "estimator.step_budget"),
        _ => ("enumerate.max_len", "enumerate.steps"),
    };
    let flags = [
        ("out", "--out", &a.out),
        ("seeds", "--seeds", &a.seeds),
        ("threads", "--threads", &a.threads),
        ("N", "--horizon", &a.horizon),
        ("world", "--world", &a.world),
        ("regulator", "--regulator", &a.regulator),
        ("estimator", "--estimator", &a.estimator),
        (len_key, "--max-len", &a.max_len),
        (steps_key, "--steps", &a.steps),
        ("estimate.input", "--input", &a.input),
    ];
    let mut errors = Vec::new();
    for (key, flag, value) in flags {
        if let Some(v) = value {
            if let Err(e) = raw.set(key, v, flag) {
                errors.push(e);
            }
        }
    }
    for s in &a.overrides {
        if let Err(e) = raw.set_assignment(s) {
            errors.push(e);
        }
    }
    errors
}

/// Parses files and flags into a validated config, reporting every problem.
fn load_config(command: Command, a: &CommonArgs) -> Result<ExperimentConfig, Vec<String>> {
    let (mut raw, mut errors) = match &a.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => RawConfig::parse_text(&text, &path.display().to_string()),
            Err(e) => return Err(vec![format!("{}: {e}", path.display())]),
        },
        None => (RawConfig::default(), Vec::new()),
    };
    errors.extend(apply_flags(&mut raw, command, a));
    match ExperimentConfig::resolve(&raw, command) {
        Ok(cfg) if errors.is_empty() => Ok(cfg),
        Ok(_) => Err(errors.iter().map(ToString::to_string).collect()),
        Err(more) => {
            errors.extend(more);
            Err(errors.iter().map(ToString::to_string).collect())
        }
    }
}

fn exit_for(e: &AgarError) -> i32 {
    match e {
        AgarError::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_USAGE,
    }
}

fn execute(cfg: &ExperimentConfig, listing: &mut dyn Write) -> i32 {
    let cache = Cache::from_env();
    let outcome = if cfg.threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
            Ok(pool) => pool.install(|| commands::dispatch(cfg, &cache)),
            Err(e) => {
                eprintln!("error: could not start {} threads: {e}", cfg.threads);
                return EXIT_USAGE;
            }
        }
    } else {
        commands::dispatch(cfg, &cache)
    };
    match outcome {
        Ok(Outcome::Done(artifacts)) => {
            if let Err(e) = artifacts::write_all(&cfg.out_dir, &artifacts) {
                eprintln!("error: writing artifacts to {}: {e}", cfg.out_dir.display());
                return EXIT_USAGE;
            }
            for a in &artifacts {
                let _ = writeln!(listing, "{}", cfg.out_dir.join(&a.name).display());
            }
            EXIT_OK
        }
        Ok(Outcome::VerifyFailed(names)) => {
            for n in names {
                eprintln!("verification failed: {n}");
            }
            EXIT_VERIFY
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout())
}

/// Like [`run`], listing written artifact paths to `listing` instead of stdout.
pub fn run_with<I, T>(args: I, listing: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (command, common) = cli.command.split();
    match load_config(command, &common) {
        Ok(cfg) => execute(&cfg, listing),
        Err(errors) => {
            for e in errors {
                eprintln!("error: {e}");
            }
            EXIT_USAGE
        }
    }
}
