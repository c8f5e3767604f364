//! `rdsim` command line: `simulate`, `sweep` and `report`.
//!
//! Exit codes: 0 success, 2 usage, 3 config, 4 I/O, 5 solver failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::report::{spectra_csv, to_json_pretty, write_file, RECORDS_DIR};
use crate::experiments::{
    emit_report, load_records, report_from_records, run_single_trial, run_sweep, ReportFormat, SweepReport,
    TrialConfig, SCHEMA_VERSION, TOOL_VERSION,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_SOLVER: u8 = 5;

pub const OUT_DIR_ENV: &str = "RDSIM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "rdsim", version, about = "Microwave-photonic random demodulator simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment config; the shipped default is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "rdsim-out")]
    pub out: PathBuf,
    /// PRBS-15 seed (decimal or 0x-prefixed hex).
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u16>,
    /// Worker threads for the sweep (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial and write its record and spectra.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// PRBS amplitude as a fraction of v_pi.
        #[arg(long, alias = "amplitudes")]
        amplitude: Option<f64>,
        /// Intra-chip sampling position (1-based).
        #[arg(long, alias = "positions")]
        position: Option<usize>,
    },
    /// Run the amplitude × position grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated amplitude ratios, e.g. 0.5,0.432,0.243.
        #[arg(long, value_delimiter = ',')]
        amplitudes: Option<Vec<f64>>,
        /// Positions as a list and/or ranges, e.g. 1-20 or 1,8,16.
        #[arg(long, value_parser = parse_positions)]
        positions: Option<Positions>,
    },
    /// Rebuild CSV and spectra tables from stored trial records.
    Report {
        /// Directory holding trial JSON records (or a sweep output directory).
        records_dir: PathBuf,
        /// Output directory; defaults to the records directory.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Positions(pub Vec<usize>);

fn parse_seed(s: &str) -> std::result::Result<u16, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u16::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_positions(s: &str) -> std::result::Result<Positions, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|e| format!("bad range {part:?}: {e}"))?;
            let b: usize = b.trim().parse().map_err(|e| format!("bad range {part:?}: {e}"))?;
            if a > b {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|e| format!("bad position {part:?}: {e}"))?);
        }
    }
    if out.is_empty() {
        return Err("no positions given".into());
    }
    Ok(Positions(out))
}

/// Persisted alongside every run so outputs can be audited and replayed.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config_path: Option<String>,
    pub out_dir: String,
    pub timestamp: String,
    pub resolved_config: TrialConfig,
}

impl RunManifest {
    fn new(command: &str, config_path: Option<&Path>, out_dir: &Path, config: &TrialConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            out_dir: out_dir.display().to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            resolved_config: config.clone(),
        }
    }

    fn write(&self, out_dir: &Path) -> Result<()> {
        write_file(&out_dir.join("manifest.json"), &to_json_pretty(self)?)
    }
}

pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::Config { .. } | Error::Schema { .. } => EXIT_CONFIG,
        Error::Io { .. } | Error::Serde(_) => EXIT_IO,
        Error::Solver(_) => EXIT_SOLVER,
    }
}

fn load_config(run: &RunArgs) -> Result<TrialConfig> {
    let mut cfg = match &run.config {
        Some(path) => TrialConfig::load(path)?,
        None => TrialConfig::shipped_default(),
    };
    if let Some(seed) = run.seed {
        cfg.prbs.seed = seed;
        cfg = cfg.resolve()?;
    }
    Ok(cfg)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn cmd_simulate(run: &RunArgs, amplitude: Option<f64>, position: Option<usize>) -> Result<()> {
    let mut cfg = load_config(run)?;
    if let Some(a) = amplitude {
        cfg = cfg.with_amplitude_ratio(a);
    }
    if let Some(p) = position {
        cfg = cfg.with_position(p);
    }
    cfg.validate()?;
    let record = with_threads(run.threads, || run_single_trial(&cfg))??;

    std::fs::create_dir_all(&run.out).map_err(|e| Error::io(&run.out, e))?;
    write_file(&run.out.join("trial.json"), &to_json_pretty(&record)?)?;
    write_file(&run.out.join("spectra.csv"), &spectra_csv(&record.spectra))?;
    RunManifest::new("simulate", run.config.as_deref(), &run.out, &cfg).write(&run.out)?;

    println!(
        "amplitude {} v_pi, position {}: reconstruction error = {}",
        record.amplitude_ratio, record.position, record.error
    );
    let freqs: Vec<String> = record
        .support_frequencies_hz
        .iter()
        .map(|f| format!("{:.1}", f / 1e6))
        .collect();
    println!("support (MHz): {}", freqs.join(", "));
    println!("wrote {}", run.out.display());
    Ok(())
}

fn print_sweep_summary(report: &SweepReport) {
    println!("amplitude/v_pi   mean error");
    for (a, m) in report.amplitudes.iter().zip(&report.mean_errors) {
        match m {
            Some(m) => println!("{a:>14}   {m:.6}"),
            None => println!("{a:>14}   (no trials)"),
        }
    }
    if let Some(r) = report.max_reduction {
        println!(
            "max_reduction: {:.1}% relative to {} v_pi (testbed reference: up to 85%)",
            100.0 * r,
            report.reference_amplitude.unwrap_or(f64::NAN)
        );
    }
    if !report.missing.is_empty() {
        println!("{} trial(s) failed; see sweep_report.json", report.missing.len());
    }
}

fn cmd_sweep(run: &RunArgs, amplitudes: Option<&[f64]>, positions: Option<&Positions>) -> Result<()> {
    let cfg = load_config(run)?;
    let amps = amplitudes.map_or_else(|| cfg.sweep.amplitude_ratios.clone(), <[f64]>::to_vec);
    let pos = positions.map_or_else(|| cfg.sweep.positions.clone(), |p| p.0.clone());
    let report = with_threads(run.threads, || run_sweep(&cfg, &amps, &pos))??;
    emit_report(&report, &run.out, &ReportFormat::ALL)?;
    RunManifest::new("sweep", run.config.as_deref(), &run.out, &report.config).write(&run.out)?;
    print_sweep_summary(&report);
    println!("wrote {}", run.out.display());
    Ok(())
}

fn cmd_report(records_dir: &Path, out: Option<&Path>) -> Result<()> {
    let nested = records_dir.join(RECORDS_DIR);
    let dir = if nested.is_dir() {
        nested
    } else {
        records_dir.to_path_buf()
    };
    let (records, skipped) = load_records(&dir)?;
    for s in &skipped {
        eprintln!("warning: skipped {}: {}", s.path.display(), s.reason);
    }
    if records.is_empty() {
        return Err(Error::io(
            &dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no readable trial records"),
        ));
    }
    let out = out.unwrap_or(records_dir);
    let report = report_from_records(records)?;
    emit_report(
        &report,
        out,
        &[ReportFormat::Csv, ReportFormat::Json, ReportFormat::Spectra],
    )?;
    print_sweep_summary(&report);
    println!("wrote {}", out.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate {
            run,
            amplitude,
            position,
        } => cmd_simulate(run, *amplitude, *position),
        Command::Sweep {
            run,
            amplitudes,
            positions,
        } => cmd_sweep(run, amplitudes.as_deref(), positions.as_ref()),
        Command::Report { records_dir, out } => cmd_report(records_dir, out.as_deref()),
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
