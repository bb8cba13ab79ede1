//! `qsot`: states over time and Bayesian inversion from the command line.

mod commands;
mod failure;

use std::io::Write;
use std::panic;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::CertifyArgs;
use failure::{code, Failure};

#[derive(Parser)]
#[command(name = "qsot", version, about = "States over time, time reversal and quantum Bayes maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a state over time E ⋆ ρ.
    Sot {
        /// Family name, e.g. ls, symmetric, right, t-rotated:0.5, rs:0.3:0.7.
        #[arg(long)]
        family: String,
        /// Channel document.
        #[arg(long)]
        channel: String,
        /// State document.
        #[arg(long)]
        state: String,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Solve Bayes' rule for a family, channel and prior.
    Bayes {
        #[arg(long)]
        family: String,
        #[arg(long)]
        channel: String,
        #[arg(long)]
        state: String,
        #[arg(long)]
        out: Option<String>,
        /// Recompute the Bayes residual; exit 4 unless it is below 1e-8.
        #[arg(long)]
        verify: bool,
        /// Solve on the support of a singular E(ρ) instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Certify axioms of families by randomized search.
    Certify {
        /// Comma-separated families (default: the eight tabulated ones).
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
        /// Comma-separated properties among P1..P7, A, M.
        #[arg(long, value_delimiter = ',')]
        properties: Option<Vec<String>>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Base seed, decimal or 0x-prefixed hex.
        #[arg(long, env = "QSOT_SEED", default_value = "0x5eed", value_parser = parse_seed)]
        seed: u64,
        /// Largest block dimension of sampled algebras.
        #[arg(long, default_value_t = 3)]
        max_dim: usize,
        #[arg(long, value_enum, default_value_t = TableFormat::Table)]
        format: TableFormat,
        /// Exit 1 unless every tabulated cell matches its known glyph.
        #[arg(long)]
        expect_paper: bool,
    },
    /// Run a worked scenario from a scenario document.
    Scenario {
        /// pem, state-update, jeffrey, two-state, correlator or ls-linearization.
        name: String,
        input: String,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("invalid seed '{s}': {e}"))
}

fn dispatch(cmd: Command) -> Result<commands::Outcome, Failure> {
    match cmd {
        Command::Sot {
            family,
            channel,
            state,
            out,
        } => commands::sot(&family, &channel, &state, out.as_deref()),
        Command::Bayes {
            family,
            channel,
            state,
            out,
            verify,
            lenient,
        } => commands::bayes(&family, &channel, &state, out.as_deref(), verify, lenient),
        Command::Certify {
            families,
            properties,
            trials,
            seed,
            max_dim,
            format,
            expect_paper,
        } => commands::certify(&CertifyArgs {
            families,
            properties,
            trials,
            seed,
            max_dim,
            json: matches!(format, TableFormat::Json),
            expect_paper,
        }),
        Command::Scenario { name, input, format } => {
            commands::scenario(&name, &input, matches!(format, ReportFormat::Json))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::VALIDATION } else { code::OK });
        }
    };
    let result = panic::catch_unwind(|| dispatch(cli.command));
    match result {
        Ok(Ok(outcome)) => {
            if !outcome.output.is_empty() {
                let mut stdout = std::io::stdout().lock();
                let _ = writeln!(stdout, "{}", outcome.output.trim_end());
            }
            ExitCode::from(outcome.code)
        }
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(code::INTERNAL)
        }
    }
}
