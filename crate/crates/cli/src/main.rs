//! `halfsine`: seeded experiments on the half-lattice sine process.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 acceptance mismatch,
//! 3 mathematical precondition violated (e.g. a spacing above 1).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CommonArgs;

#[derive(Debug, Parser)]
#[command(name = "halfsine", version, about = "Seeded experiments on the half-lattice sine process")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gap probabilities G_{L/2}: analytic, closed form and empirical
    Gaps(CommonArgs),
    /// Sample configurations on a window of lattice sites
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// Add a uniform shift in [0, 1/2) (half lattice only)
        #[arg(long)]
        shifted: bool,
    },
    /// Run the verification suites: agreement, offdiagonal, shifted, macchi, sumrules
    Verify(CommonArgs),
    /// Two-point form factors: ALT and GUE predictions against a sample
    Formfactor(CommonArgs),
    /// Shift averages along one sampled sequence and their convergence
    Ergodic {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the sequence, one half-integer per line
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Mismatch(String),
    Precondition(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Mismatch(_) => 2,
            CliError::Precondition(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Mismatch(m) | CliError::Precondition(m) => m,
        }
    }
}

impl From<halfsine::Error> for CliError {
    fn from(e: halfsine::Error) -> Self {
        use halfsine::Error as E;
        match e {
            E::InvalidParameter(_) | E::NonFinite(_) | E::Parse(_) | E::Json(_) => CliError::Usage(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gaps(args) => commands::gaps(args),
        Command::Sample { common, shifted } => commands::sample(common, shifted),
        Command::Verify(args) => commands::verify(args),
        Command::Formfactor(args) => commands::formfactor(args),
        Command::Ergodic { common, sequence } => commands::ergodic(common, sequence),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("halfsine: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
