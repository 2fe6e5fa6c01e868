//! Command-line front end.
//!
//! Exit codes: 0 clean run, 1 usage or I/O error, 2 attack detected (the
//! digest comparison failed, or the amplitude check clicked).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kkkp_core::analysis::{estimate_qber, oracle_tally, run_attack, Attack};
use kkkp_core::protocol::{ProtocolError, ProtocolVariant};
use kkkp_core::rng::{Role, SeedStreams};
use kkkp_core::sidechannel::{count_detections, dark_port_click_probability, dark_port_mean, CoherentAmplitude};
use serde::Serialize;
use thiserror::Error;

use crate::config::{strategy_for, AttackArg, EvePulseArg, EveShuffleArg, OutputFormat, RunConfig, VariantArg};
use crate::report::{to_csv, to_json, ReportRow};
use crate::wire::write_transcript;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DETECTED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "kkkp",
    version,
    about = "Simulate the two-pulse KKKP protocol and the impersonation attack",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Without a subcommand the flags run a session.
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session and print its report.
    Run(RunArgs),
    /// Print the exact error rate for every variant and Eve strategy.
    Oracle,
    /// Sample the beam-splitter amplitude check for a pulse pair.
    CheckAmplitude(AmplitudeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "modified")]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "none")]
    pub attack: AttackArg,
    #[arg(long, value_enum, default_value = "00")]
    pub eve_shuffle: EveShuffleArg,
    #[arg(long, value_enum, default_value = "first")]
    pub eve_pulse: EvePulseArg,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,
    /// Write the delivered messages as JSONL to this file.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        RunConfig {
            variant: a.variant.into(),
            attack: a.attack,
            eve_shuffle: a.eve_shuffle,
            eve_pulse: a.eve_pulse,
            rounds: a.rounds,
            seed: a.seed,
            output_format: a.output,
            transcript_path: a.transcript,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AmplitudeArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a_im: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub b_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub b_im: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("cannot write transcript {path}: {source}")]
    Transcript { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid amplitude: components must be finite")]
    InvalidAmplitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: ReportRow,
    /// Rendered report, newline terminated.
    pub rendered: String,
    pub exit_code: i32,
}

/// Runs one session as configured, writing the transcript if requested.
pub fn execute(config: &RunConfig) -> Result<RunOutput, RunError> {
    let attack = config.attack();
    let session = run_attack(config.variant, &attack, config.rounds, config.seed)?;
    if let Some(path) = &config.transcript_path {
        let write = |path: &PathBuf| -> io::Result<()> {
            let mut w = BufWriter::new(File::create(path)?);
            write_transcript(&session, &mut w)?;
            w.flush()
        };
        write(path).map_err(|source| RunError::Transcript { path: path.clone(), source })?;
    }
    let report = estimate_qber(&session).with_oracle(attack);
    let row = ReportRow::from(&report);
    let rendered = match config.output_format {
        OutputFormat::Json => format!("{}\n", to_json(&row)),
        OutputFormat::Csv => to_csv(std::slice::from_ref(&row))?,
    };
    let exit_code = if report.detected { EXIT_DETECTED } else { EXIT_OK };
    Ok(RunOutput { report: row, rendered, exit_code })
}

/// One row of the oracle table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRow {
    pub variant: ProtocolVariant,
    pub eve_shuffle: &'static str,
    pub eve_pulse: &'static str,
    pub exact_qber: String,
    pub eve_key_accuracy: String,
}

pub fn oracle_rows() -> Vec<OracleRow> {
    let mut rows = Vec::new();
    for variant in ProtocolVariant::ALL {
        let honest = oracle_tally(variant, &Attack::None);
        rows.push(OracleRow {
            variant,
            eve_shuffle: "none",
            eve_pulse: "-",
            exact_qber: honest.error_rate().to_string(),
            eve_key_accuracy: "-".into(),
        });
        for shuffle in EveShuffleArg::ALL {
            for pulse in EvePulseArg::ALL {
                let strategy = strategy_for(shuffle, pulse);
                let tally = oracle_tally(variant, &Attack::Impersonation(strategy));
                rows.push(OracleRow {
                    variant,
                    eve_shuffle: shuffle.name(),
                    eve_pulse: strategy.pulse_choice.as_str(),
                    exact_qber: tally.error_rate().to_string(),
                    eve_key_accuracy: tally.eve_accuracy().to_string(),
                });
            }
        }
    }
    rows
}

pub fn oracle_table() -> String {
    let mut out = format!(
        "{:<10} {:<11} {:<9} {:<10} {}\n",
        "variant", "eve_shuffle", "eve_pulse", "exact_qber", "eve_key_accuracy"
    );
    for r in oracle_rows() {
        out.push_str(&format!(
            "{:<10} {:<11} {:<9} {:<10} {}\n",
            r.variant.as_str(),
            r.eve_shuffle,
            r.eve_pulse,
            r.exact_qber,
            r.eve_key_accuracy
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeReport {
    pub dark_port_mean: f64,
    pub click_probability: f64,
    pub trials: u64,
    pub detections: u64,
    pub frequency: f64,
}

pub fn check_amplitude(args: &AmplitudeArgs) -> Result<AmplitudeReport, RunError> {
    let a = CoherentAmplitude::new(args.a_re, args.a_im);
    let b = CoherentAmplitude::new(args.b_re, args.b_im);
    if !a.is_finite() || !b.is_finite() {
        return Err(RunError::InvalidAmplitude);
    }
    let mut rng = SeedStreams::new(args.seed).stream(0, Role::Auxiliary);
    let detections = count_detections(a, b, args.trials, &mut rng);
    Ok(AmplitudeReport {
        dark_port_mean: dark_port_mean(a, b),
        click_probability: dark_port_click_probability(a, b),
        trials: args.trials,
        detections,
        frequency: if args.trials == 0 { 0.0 } else { detections as f64 / args.trials as f64 },
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        None => execute(&cli.run.into()).map(|o| (o.rendered, o.exit_code)),
        Some(Command::Run(args)) => execute(&args.into()).map(|o| (o.rendered, o.exit_code)),
        Some(Command::Oracle) => Ok((oracle_table(), EXIT_OK)),
        Some(Command::CheckAmplitude(args)) => check_amplitude(&args).map(|r| {
            let code = if r.detections > 0 { EXIT_DETECTED } else { EXIT_OK };
            (format!("{}\n", serde_json::to_string(&r).expect("report serializes")), code)
        }),
    };
    match result {
        Ok((text, code)) => {
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_USAGE;
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
