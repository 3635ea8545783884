//! Command-line front end for the ZIMS link-level experiments.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use zims_core::runner::{self, ConfigFile, ExperimentConfig, ExperimentId};

#[derive(Parser)]
#[command(
    name = "zims",
    about = "Link-level simulation of zero-interval modulation and sampling virtual full-duplex OFDM",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment sweep and write CSV results.
    Run(RunArgs),
    /// Check the frame timing conditions and print the report.
    Validate(ValidateArgs),
    /// List the built-in experiments.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment id (fig3..fig9, custom).
    #[arg(long)]
    experiment: Option<String>,
    /// Config file (TOML); overrides the experiment preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; drawn from entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Subcarrier-count override (the full reference scale is 2048).
    #[arg(long)]
    scale: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Worker threads for the trial loop.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Config file (TOML) supplying the [waveform] section.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn resolve_run_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let fallback = args
        .experiment
        .as_deref()
        .map(|s| s.parse::<ExperimentId>())
        .transpose()?;
    let mut cfg = match &args.config {
        Some(path) => {
            let file = ConfigFile::load(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            file.resolve(fallback)?
        }
        None => match fallback {
            Some(id) => ExperimentConfig::preset(id),
            None => bail!("missing --experiment or --config"),
        },
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(two_n) = args.scale {
        cfg.two_n = two_n;
        if two_n >= 1024 {
            eprintln!(
                "warning: full-scale run with 2N = {two_n}; expect a long runtime and large memory use"
            );
        }
    }
    if let Some(workers) = args.workers {
        cfg.workers = Some(workers);
    }
    if let Some(output) = &args.output {
        cfg.output = Some(output.clone());
    }
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    if args.format != "csv" {
        bail!("unsupported format `{}` (only csv)", args.format);
    }
    let cfg = resolve_run_config(args)?;
    eprintln!(
        "running {}: 2N={}, trials={}, K={}x{}",
        cfg.experiment, cfg.two_n, cfg.trials, cfg.k_tx, cfg.k_rx
    );
    let table = runner::run_experiment(&cfg)?;
    eprintln!("seed={}", table.seed);
    match &cfg.output {
        Some(path) => {
            table.write_csv(path)?;
            eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<bool> {
    // reference defaults: 2N=1024 over 20 MHz (data interval 51.2 us),
    // transitions 1.9 us, delay spread 100 ns, zero-interval 5 us
    let mut two_n = 1024usize;
    let mut bandwidth = 20.0e6;
    let mut t_zero = 5.0e-6;
    let mut transition = 1.9e-6;
    let mut tau = 100.0e-9;
    if let Some(path) = &args.config {
        let file = ConfigFile::load(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let w = &file.waveform;
        if let Some(v) = w.two_n {
            two_n = v;
        }
        if let Some(v) = w.bandwidth_hz {
            bandwidth = v;
        }
        if let Some(v) = w.t_zero_s {
            t_zero = v;
        }
        if let Some(v) = w.transition_s {
            transition = v;
        }
        if let Some(v) = w.tau_max_s {
            tau = v;
        }
    }
    let report = runner::validate_frame(two_n, bandwidth, t_zero, transition, tau)?;
    println!(
        "frame: 2N={two_n}, B={bandwidth} Hz, T_D={:.4e} s, T_Z={t_zero:.4e} s, delta={transition:.4e} s, tau={tau:.4e} s",
        two_n as f64 / bandwidth
    );
    println!("{report}");
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| true),
        Command::Validate(args) => cmd_validate(args),
        Command::List => {
            for id in ExperimentId::all() {
                println!("{id}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
