use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qlab::report::ReportFormat;
use qlab::run::{configure_threads, render, run_scenario, verify_suite, ExitStatus, RunOutcome, SuiteOptions};

/// Q-curvature laboratory on spectrally discretized flat tori.
///
/// Thread count: QLAB_THREADS (defaults to all cores).
#[derive(Parser)]
#[command(name = "qlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write its report.
    Run { scenario: PathBuf },
    /// Run the identity battery at several resolutions.
    Verify {
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        pairs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Report destination; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the tool and report-schema versions.
    Version,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn emit(outcome: &RunOutcome, format: ReportFormat, output: Option<&PathBuf>) -> ExitStatus {
    match render(outcome, format) {
        Ok(Some(text)) => match output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("qlab: {}: {e}", path.display());
                    return ExitStatus::ConfigError;
                }
            }
            None => print!("{text}"),
        },
        Ok(None) => {}
        Err(e) => {
            eprintln!("qlab: {e}");
            return ExitStatus::ConfigError;
        }
    }
    outcome.status
}

fn main() -> ExitCode {
    // usage errors are configuration errors; clap's own code 2 would read as a failed check
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                ExitStatus::ConfigError.code() as u8
            } else {
                0
            });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("qlab: {e}");
        return ExitCode::from(ExitStatus::ConfigError.code() as u8);
    }
    let status = match cli.command {
        Command::Version => {
            println!(
                "qlab {} (report schema {})",
                qlab::report::tool_version(),
                qlab::report::REPORT_SCHEMA_VERSION
            );
            ExitStatus::Pass
        }
        Command::Run { scenario } => {
            let outcome = run_scenario(&scenario);
            let to_stdout = outcome.report.is_some() && scenario_output_is_stdout(&scenario);
            let status = if to_stdout {
                emit(&outcome, scenario_format(&scenario), None)
            } else {
                outcome.status
            };
            if let Some(d) = &outcome.diagnostic {
                eprintln!("qlab: {d}");
            }
            status
        }
        Command::Verify {
            sizes,
            dim,
            pairs,
            seed,
            output,
            format,
        } => {
            let outcome = verify_suite(&SuiteOptions {
                dim,
                sizes,
                pairs,
                seed,
            });
            let format = match format {
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
            let status = emit(&outcome, format, output.as_ref());
            if let Some(d) = &outcome.diagnostic {
                eprintln!("qlab: {d}");
            }
            status
        }
    };
    ExitCode::from(status.code() as u8)
}

fn scenario_output_is_stdout(path: &Path) -> bool {
    qlab::scenario::Scenario::load(path)
        .map(|s| s.output.path.is_none())
        .unwrap_or(false)
}

fn scenario_format(path: &Path) -> ReportFormat {
    qlab::scenario::Scenario::load(path)
        .map(|s| s.output.format)
        .unwrap_or_default()
}
