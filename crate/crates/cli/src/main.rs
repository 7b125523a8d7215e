//! `nrpos`: generate reference signals, simulate the RTT ranging sweep,
//! estimate ranges from dataset folders, compute link metrics and record or
//! extract traces.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

mod config;
mod error;
mod estimate;
mod generate;
mod metrics_cmd;
mod scan;
mod simulate;
mod trace;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nrpos::chanest::{ImpulseSource, PeakMode};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "nrpos", version, about = "5G NR positioning baseband toolkit")]
struct Cli {
    /// Seed for every random draw; printed in all output headers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Srs,
    Prs,
    Prach,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Srs => "srs",
            Kind::Prs => "prs",
            Kind::Prach => "prach",
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Source {
    /// Impulse response of the interpolated band.
    Interp,
    /// Impulse response of the comb values only.
    Comb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Strongest,
    First,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map a reference signal on a grid and OFDM-modulate it.
    Generate {
        kind: Kind,
        /// key = value overrides (numerology, device, signal parameters).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output prefix for .txdataF, .iq and _re_map.csv.
        #[arg(long)]
        output: PathBuf,
    },
    /// Simulate the distance by attenuation sweep into dataset folders.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Estimate ToA and range for every record under a dataset root.
    Estimate {
        root: PathBuf,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Source::Interp)]
        source: Source,
        #[arg(long, value_enum, default_value_t = Mode::Strongest)]
        mode: Mode,
        #[arg(long)]
        threshold_db: Option<f64>,
        /// Fixed timing bias removed before converting to range.
        #[arg(long, default_value_t = 0.0)]
        bias_samples: f64,
    },
    /// Power per RE, dBm and SNR of raw Q15 I/Q files.
    Metrics {
        input: PathBuf,
        /// Noise-only samples for the SNR estimate.
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long, default_value = "usrp-b210")]
        device: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Record or extract trace files.
    Trace {
        #[command(subcommand)]
        action: TraceAction,
    },
    /// Create or inventory dataset folders.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
}

#[derive(Debug, Subcommand)]
enum TraceAction {
    /// Replay dataset records as trace events.
    Record {
        /// Dataset root or a single record folder.
        root: PathBuf,
        #[arg(long)]
        defs: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Concatenate one field of one message ID.
    Extract {
        trace: PathBuf,
        #[arg(long)]
        defs: Option<PathBuf>,
        #[arg(long)]
        id: String,
        #[arg(long)]
        field: String,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum DatasetAction {
    /// Simulate one record.
    Make {
        #[arg(long)]
        distance: f64,
        #[arg(long, default_value_t = 0.0)]
        attenuation: f64,
        /// Per-RE SNR; defaults to 25 dB minus the attenuation.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// List the records under a root as CSV.
    Scan {
        root: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(simulate::DEFAULT_SEED);
    match cli.command {
        Command::Generate { kind, config, output } => {
            emit(&generate::run(kind, config.as_deref(), &output, seed)?, None)
        }
        Command::Simulate { scenario, output, jobs } => {
            let text = simulate::run(&scenario, &output, jobs, cli.seed)?;
            emit(&text, None)
        }
        Command::Estimate {
            root,
            output,
            source,
            mode,
            threshold_db,
            bias_samples,
        } => {
            let args = estimate::EstimateArgs {
                source: match source {
                    Source::Interp => ImpulseSource::Interpolated,
                    Source::Comb => ImpulseSource::Comb,
                },
                mode: match mode {
                    Mode::Strongest => PeakMode::Strongest,
                    Mode::First => PeakMode::FirstAboveThreshold,
                },
                threshold_db,
                bias_samples,
            };
            let (csv, warnings) = estimate::run(&root, &args, seed)?;
            warn_all(&warnings);
            emit(&csv, output.as_deref())
        }
        Command::Metrics {
            input,
            noise,
            device,
            output,
        } => {
            let dev = config::parse_device(&device)?;
            emit(&metrics_cmd::run(&input, noise.as_deref(), &dev, seed)?, output.as_deref())
        }
        Command::Trace { action } => match action {
            TraceAction::Record { root, defs, output } => emit(&trace::record(&root, defs.as_deref(), &output)?, None),
            TraceAction::Extract {
                trace,
                defs,
                id,
                field,
                output,
            } => {
                let (text, warning) = trace::extract_cmd(&trace, defs.as_deref(), &id, &field, &output)?;
                warn_all(warning.as_slice());
                emit(&text, None)
            }
        },
        Command::Dataset { action } => match action {
            DatasetAction::Make {
                distance,
                attenuation,
                snr,
                snapshots,
                output,
            } => emit(
                &simulate::make(simulate::MakeArgs {
                    distance_m: distance,
                    attenuation_db: attenuation,
                    snr_db: snr,
                    snapshots,
                    output: &output,
                    seed: cli.seed,
                })?,
                None,
            ),
            DatasetAction::Scan { root, output } => {
                let (csv, warnings) = scan::run(&root, seed)?;
                warn_all(&warnings);
                emit(&csv, output.as_deref())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
