use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use birelay_cli::{db_range, emit, emit_to_path, run_sweep_with, CliError, Format, Protocol, RunSpec, ThresholdCache};
use birelay_core::calibrate::{calibrate, CalibrationConfig};
use birelay_core::channel::FadingStatistics;
use birelay_core::{db_to_linear, oracle};
use clap::{Args, Parser, Subcommand};

/// Buffer-aided bidirectional relaying: sweeps, calibration and oracle checks.
#[derive(Debug, Parser)]
#[command(name = "birelay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sum rate versus total power for a set of protocols.
    Sweep(SweepArgs),
    /// Run the oracle property suite.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print calibrated thresholds for one operating point as JSON.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML run spec; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    omega1: Option<f64>,
    #[arg(long)]
    omega2: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["pt_db_stop", "pt_db_step"])]
    pt_db_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "pt_db_start")]
    pt_db_stop: Option<f64>,
    #[arg(long, requires = "pt_db_start")]
    pt_db_step: Option<f64>,
    /// comma-separated powers in dB
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "pt_db_start"
    )]
    pt_db_list: Option<Vec<f64>>,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// comma-separated subset of proposed, tdbc_no_pa, tdbc_pa,
    /// fixed_power_six_mode, fixed_power_three_mode
    #[arg(long, value_delimiter = ',')]
    protocols: Option<Vec<Protocol>>,
    #[arg(long)]
    format: Option<Format>,
    /// output file; stdout if absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol_rate: Option<f64>,
    #[arg(long)]
    tol_power: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// no per-row progress on stderr
    #[arg(long, short)]
    quiet: bool,
}

impl SweepArgs {
    fn spec(&self) -> Result<RunSpec, CliError> {
        let mut spec = match &self.config {
            Some(path) => RunSpec::load(path)?,
            None => RunSpec::default(),
        };
        if let Some(v) = self.omega1 {
            spec.omega1 = v;
        }
        if let Some(v) = self.omega2 {
            spec.omega2 = v;
        }
        if let (Some(a), Some(b), Some(s)) = (self.pt_db_start, self.pt_db_stop, self.pt_db_step) {
            spec.pt_db_sweep = db_range(a, b, s)?;
        }
        if let Some(list) = &self.pt_db_list {
            spec.pt_db_sweep = list.clone();
        }
        if let Some(v) = self.slots {
            spec.n_slots = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = &self.protocols {
            spec.protocols = v.clone();
        }
        if let Some(v) = self.format {
            spec.format = v;
        }
        if let Some(v) = &self.out {
            spec.out = Some(v.clone());
        }
        if let Some(v) = self.tol_rate {
            spec.tol_rate = v;
        }
        if let Some(v) = self.tol_power {
            spec.tol_power = v;
        }
        if let Some(v) = self.max_iters {
            spec.max_iters = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 1.0)]
    omega1: f64,
    #[arg(long, default_value_t = 1.0)]
    omega2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pt_db: f64,
    #[arg(long, default_value_t = CalibrationConfig::DEFAULT_SLOTS)]
    slots: usize,
    #[arg(long, default_value_t = CalibrationConfig::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = CalibrationConfig::DEFAULT_TOL)]
    tol_rate: f64,
    #[arg(long, default_value_t = CalibrationConfig::DEFAULT_TOL)]
    tol_power: f64,
    #[arg(long, default_value_t = CalibrationConfig::DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

const EXIT_PARTIAL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn sweep(args: &SweepArgs) -> Result<bool, CliError> {
    let spec = args.spec()?;
    let quiet = args.quiet;
    let table = run_sweep_with(&spec, &mut ThresholdCache::default(), |row| {
        if !quiet {
            let flag = if row.converged { "" } else { "  (not converged)" };
            eprintln!(
                "{:<24} {:>7.2} dB  sum rate {:.4}{flag}",
                row.protocol.name(),
                row.pt_db,
                row.sum_rate
            );
        }
    })?;
    match &spec.out {
        Some(path) => emit_to_path(&table, spec.format, path)?,
        None => emit(&table, spec.format, io::stdout().lock())?,
    }
    Ok(table.all_converged())
}

fn verify(seed: u64) -> Result<bool, CliError> {
    let checks = oracle::verify_all(seed)?;
    let mut out = io::stdout().lock();
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{status} {} (worst {:.3e}, tolerance {:.1e}, {} samples)",
            c.name, c.worst, c.tolerance, c.samples
        )?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn calibrate_point(args: &CalibrateArgs) -> Result<bool, CliError> {
    let stats = FadingStatistics::new(args.omega1, args.omega2).map_err(|e| CliError::Spec(e.to_string()))?;
    let mut cfg = CalibrationConfig::new(stats, db_to_linear(args.pt_db)).map_err(|e| CliError::Spec(e.to_string()))?;
    cfg.n_slots = args.slots;
    cfg.seed = args.seed;
    cfg.tol_rate = args.tol_rate;
    cfg.tol_power = args.tol_power;
    cfg.max_iters = args.max_iters;
    cfg.validate().map_err(|e| CliError::Spec(e.to_string()))?;
    let result = calibrate(&cfg)?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &result)?;
    writeln!(out)?;
    Ok(result.converged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Verify { seed } => verify(*seed),
        Command::Calibrate(args) => calibrate_point(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_PARTIAL),
        Err(e @ CliError::Spec(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}
