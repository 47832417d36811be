//! `hccm`: simulate homodyne cross-correlation runs, analyze the records and
//! test the signal for nonclassicality.

mod commands;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hccm_core::record::RecordFormat;

use commands::Options;

#[derive(Parser)]
#[command(name = "hccm", version, about = "Homodyne cross-correlation virtual lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RecordKind {
    Text,
    Binary,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the phase scan (and the LO-strength scan, if configured) and write the records.
    Simulate {
        #[command(flatten)]
        opts: Options,
        #[arg(long, value_enum, default_value_t = RecordKind::Binary)]
        record_format: RecordKind,
    },
    /// Fit and separate the records in the output directory.
    Analyze {
        #[command(flatten)]
        opts: Options,
    },
    /// Determinant test on the separated contributions.
    Test {
        #[command(flatten)]
        opts: Options,
    },
    /// Simulation, analysis and test with the paper preset, without writing raw records.
    ReproducePaper {
        #[command(flatten)]
        opts: Options,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (opts, result) = match &cli.command {
        Command::Simulate { opts, record_format } => {
            let format = match record_format {
                RecordKind::Text => RecordFormat::Text,
                RecordKind::Binary => RecordFormat::Binary,
            };
            (opts, commands::simulate(opts, format))
        }
        Command::Analyze { opts } => (opts, commands::analyze(opts)),
        Command::Test { opts } => (opts, commands::test(opts)),
        Command::ReproducePaper { opts } => (opts, commands::reproduce_paper(opts)),
    };
    match result {
        Ok(summary) => {
            print!("{}", summary.render(opts.format));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
