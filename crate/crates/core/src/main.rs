use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use specfilter::cli::{cmd_filter, cmd_montecarlo, cmd_plan, cmd_spectrum, exit_code, output_dir};
use specfilter::config::RunConfig;
use specfilter::Result;

#[derive(Parser)]
#[command(name = "specfilter", version, about = "Spectral-filtering state initialization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (`key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampled measurements (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte-Carlo trials
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Trial and filtered power spectra
    Spectrum,
    /// Filter the trial state and report accuracy and probabilities
    Filter,
    /// Recommended number of time steps and probability floor
    Plan,
    /// Sampled-mode restart statistics
    Montecarlo,
}

fn run(cli: Cli) -> Result<()> {
    let path = cli
        .config
        .ok_or_else(|| specfilter::Error::Config { line: 0, message: "--config is required".into() })?;
    let cfg = RunConfig::load(&path)?;
    let out = output_dir(&cfg, cli.out);
    let seed = cli.seed.unwrap_or(cfg.seed);
    match cli.command {
        Command::Spectrum => {
            let run = cmd_spectrum(&cfg, &out)?;
            for p in &run.trial.peaks {
                println!("trial peak     E = {:.6}  |C| = {:.6e}", p.energy, p.height);
            }
            for p in &run.filtered.peaks {
                println!("filtered peak  E = {:.6}  |C| = {:.6e}", p.energy, p.height);
            }
            for f in &run.files {
                println!("wrote {f}");
            }
        }
        Command::Filter => {
            let report = cmd_filter(&cfg, &out, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Plan => {
            let report = cmd_plan(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Montecarlo => {
            let s = cmd_montecarlo(&cfg, &out, seed, cli.jobs)?;
            println!(
                "trials {}  attempts {}  P_success {:.6} +/- {:.6} (deterministic {:.6})  mean attempts {:.4}",
                s.trials,
                s.attempts,
                s.empirical_p_success,
                s.p_success_std_error,
                s.deterministic_p_success,
                s.mean_filter_attempts
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("specfilter: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
