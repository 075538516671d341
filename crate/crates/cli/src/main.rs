//! `pbmo-lab`: run the verification pipelines from a sectioned key = value
//! config and emit CSV reports plus a manifest.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use pipeline::{exit_code_for, Lab};

#[derive(Parser)]
#[command(name = "pbmo-lab", version, about = "Parabolic BMO verification lab")]
struct Cli {
    /// Config file (sectioned key = value text).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV reports and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Global grid refinement: halves h and doubles nt, k times.
    #[arg(long, global = true, default_value_t = 0)]
    refine: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Quasihyperbolic distances, geodesics, and the boundary-condition fit.
    Qh,
    /// Greedy 5r Whitney-type cover of the domain.
    Cover,
    /// Geodesic chains from seeded starts, with certificates.
    Chain,
    /// Sampled-family parabolic BMO seminorm.
    Pbmo,
    /// Per-rectangle exponential decay fits on fragments.
    Jn,
    /// Global decay fit over the trimmed cylinder.
    GlobalJn,
    /// Exponential integrals of the positive and negative parts.
    Expint,
    /// Run the doubly nonlinear solver and export the field.
    Solve,
    /// Weak-form supersolution verdict against smooth bumps.
    VerifySuper,
    /// Per-rectangle power decay of log f around its median.
    Lemma62,
    /// Power-b and plain seminorms of -log f.
    LogPbmo,
    /// Small-power integral of f, stability under one refinement.
    Integrability,
    /// Every pipeline that applies to the config, in order.
    All,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Qh => "qh",
            Command::Cover => "cover",
            Command::Chain => "chain",
            Command::Pbmo => "pbmo",
            Command::Jn => "jn",
            Command::GlobalJn => "global-jn",
            Command::Expint => "expint",
            Command::Solve => "solve",
            Command::VerifySuper => "verify-super",
            Command::Lemma62 => "lemma62",
            Command::LogPbmo => "log-pbmo",
            Command::Integrability => "integrability",
            Command::All => "all",
        }
    }
}

fn run() -> Result<bool, (u8, String)> {
    let cli = Cli::parse();
    let config_path = cli
        .config
        .ok_or_else(|| (2u8, "--config <path> is required".to_string()))?;
    let config_text = std::fs::read_to_string(&config_path)
        .map_err(|e| (2u8, format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = Config::parse(&config_text).map_err(|e| (2u8, e.to_string()))?;
    let mut lab = Lab::new(cfg, cli.out, cli.seed, cli.refine)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let verdict = match cli.command {
        Command::Qh => lab.run_qh(),
        Command::Cover => lab.run_cover(),
        Command::Chain => lab.run_chain(),
        Command::Pbmo => lab.run_pbmo(),
        Command::Jn => lab.run_local_jn(),
        Command::GlobalJn => lab.run_global_jn(),
        Command::Expint => lab.run_expint(),
        Command::Solve => lab.run_solve(),
        Command::VerifySuper => lab.run_verify_super(),
        Command::Lemma62 => lab.run_lemma62(),
        Command::LogPbmo => lab.run_log_pbmo(),
        Command::Integrability => lab.run_integrability(),
        Command::All => lab.run_all(),
    }
    .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    lab.write_manifest(cli.command.name(), &config_text)
        .map_err(|e| (2u8, e.to_string()))?;
    Ok(verdict)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see the output CSVs");
            ExitCode::from(1)
        }
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
