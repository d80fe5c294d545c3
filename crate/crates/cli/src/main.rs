//! `grm`: generate synthetic group-driven mobility traces, fit parameters
//! from existing traces, analyze contact statistics, and evaluate
//! forwarding protocols.

use clap::{Parser, Subcommand, ValueEnum};
use grm_cli::{
    cmd_analyze, cmd_fit, cmd_forward, cmd_generate, parse_ttl_list, Analysis, AppError,
    ForwardOptions,
};
use grm_core::config::{ContactMode, Seconds};
use grm_core::trace::TraceFormat;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "grm", version, about = "Group-regularity mobility trace generator and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Meeting,
    Proximity,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    OneConnections,
    Csv,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::OneConnections => TraceFormat::OneConnections,
            FormatArg::Csv => TraceFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate movement, connection and contact traces from a config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Contact extraction mode (overrides the config).
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit generator parameters from a contact trace and emit a config.
    Fit {
        #[arg(long)]
        trace: PathBuf,
        /// Trace format; inferred from the extension when omitted.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Output config path.
        #[arg(long)]
        out: PathBuf,
        /// Group-detection window (e.g. "1h").
        #[arg(long, default_value = "1h")]
        window: String,
        /// Minimum detected-group size.
        #[arg(long, default_value_t = 2)]
        min_size: usize,
    },
    /// Compute trace statistics (ICT/CD CCDFs, re-meetings, communities).
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Output directory for the CSV bundle.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of ict,cd,remeeting,communities,fit.
        #[arg(long)]
        analyses: Option<String>,
        #[arg(long, default_value = "1h")]
        window: String,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
    },
    /// Replay forwarding protocols over a trace for a TTL sweep.
    Forward {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Comma-separated protocols: flooding,bubble-rap,groups-net.
        #[arg(long, default_value = "flooding,bubble-rap,groups-net")]
        protocols: String,
        /// Comma-separated TTLs with unit suffixes (s/m/h/d/w).
        #[arg(long, default_value = "6h,1d,3d,1w")]
        ttl: String,
        /// Number of messages in the workload.
        #[arg(long, default_value_t = 1000)]
        messages: usize,
        /// Fraction of the trace reserved for protocol warm-up.
        #[arg(long, default_value_t = 0.3)]
        warmup: f64,
        /// Workload seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output metrics CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run() -> Result<(), AppError> {
    match Cli::parse().command {
        Command::Generate {
            config,
            seed,
            mode,
            out,
        } => {
            let mode = mode.map(|m| match m {
                ModeArg::Meeting => ContactMode::Meeting,
                ModeArg::Proximity => ContactMode::Proximity,
            });
            let scenario = cmd_generate(&config, seed, mode, &out)?;
            eprintln!(
                "generated {} meetings, {} contacts into {}",
                scenario.schedule.events.len(),
                scenario.trace.events().len(),
                out.display()
            );
            Ok(())
        }
        Command::Fit {
            trace,
            format,
            out,
            window,
            min_size,
        } => {
            let window = Seconds::parse(&window)
                .map_err(|e| AppError::Validation(e.to_string()))?
                .0;
            cmd_fit(&trace, format.map(Into::into), &out, window, min_size)?;
            eprintln!("fitted config written to {}", out.display());
            Ok(())
        }
        Command::Analyze {
            trace,
            format,
            out,
            analyses,
            window,
            min_size,
        } => {
            let selected = match analyses {
                Some(list) => Analysis::parse_list(&list)?,
                None => Analysis::all(),
            };
            let window = Seconds::parse(&window)
                .map_err(|e| AppError::Validation(e.to_string()))?
                .0;
            let written = cmd_analyze(
                &trace,
                format.map(Into::into),
                &out,
                &selected,
                window,
                min_size,
            )?;
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Forward {
            trace,
            format,
            protocols,
            ttl,
            messages,
            warmup,
            seed,
            out,
        } => {
            let opts = ForwardOptions {
                protocols: protocols.split(',').map(|s| s.trim().to_string()).collect(),
                ttls: parse_ttl_list(&ttl)?,
                messages,
                warmup_fraction: warmup,
                seed,
            };
            let metrics = cmd_forward(&trace, format.map(Into::into), &opts, &out)?;
            for m in &metrics {
                eprintln!(
                    "{} ttl {}h: delivery {:.3}, {} transmissions",
                    m.protocol,
                    m.ttl / 3600.0,
                    m.delivery_ratio(),
                    m.transmissions
                );
            }
            Ok(())
        }
    }
}

fn main() {
    env_logger::init();
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
