//! `nonabsolute` command-line front end.
//!
//! Every command prints a JSON run record on stdout. Exit status is 0 on
//! success, 1 on invalid input and 2 when a linear program fails.

mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nonabsolute::Mode;

#[derive(Parser)]
#[command(
    name = "nonabsolute",
    version,
    about = "Bounds and measures of non-absoluteness of observed events"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum of an inequality over the relaxed LF set, plus its NS maximum.
    Bound(BoundArgs),
    /// Non-absoluteness fraction and coefficient of a behavior.
    Measures(MeasuresArgs),
    /// Quantum chained behaviors across a range of input counts.
    Sweep(SweepArgs),
    /// Write a behavior file.
    Gen(GenArgs),
    /// Validate normalization and no-signalling of a behavior file.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    /// Each party's last input is the friend input.
    Last,
    /// Each party's first input is the friend input.
    First,
}

impl Convention {
    pub fn friend_input(self, m: usize) -> usize {
        match self {
            Convention::Last => m - 1,
            Convention::First => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rational,
    Float,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rational => Mode::Rational,
            ModeArg::Float => Mode::Float,
        }
    }
}

#[derive(Args)]
pub struct BoundArgs {
    /// Catalog label (`I_1` … `I_6`, `chained`, `chsh`, `mermin`).
    #[arg(required_unless_present = "file", conflicts_with = "file")]
    pub inequality: Option<String>,
    /// Inequality JSON file instead of a catalog label.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Number of inputs per party, for generated families.
    #[arg(long)]
    pub m: Option<usize>,
    /// Relaxation as an exact fraction such as `1/4`.
    #[arg(long, default_value = "0")]
    pub epsilon: String,
    #[arg(long, value_enum, default_value_t = Convention::Last)]
    pub convention: Convention,
    #[arg(long, value_enum, default_value_t = ModeArg::Rational)]
    pub mode: ModeArg,
}

#[derive(Args)]
pub struct MeasuresArgs {
    /// Behavior JSON file.
    #[arg(required_unless_present_any = ["quantum_chained", "ghz"], conflicts_with_all = ["quantum_chained", "ghz"])]
    pub behavior: Option<PathBuf>,
    /// Quantum chained-optimal behavior with this many inputs.
    #[arg(long, conflicts_with = "ghz")]
    pub quantum_chained: Option<usize>,
    /// GHZ behavior with Mermin settings.
    #[arg(long)]
    pub ghz: bool,
    /// Defaults to the file's mode, or float for quantum behaviors.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Friend inputs for generated behaviors.
    #[arg(long, value_enum, default_value_t = Convention::Last)]
    pub convention: Convention,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Chained,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Family::Chained)]
    pub family: Family,
    /// Inclusive range such as `2..10`.
    #[arg(long, default_value = "2..10")]
    pub m_range: String,
    /// Also write the table as CSV to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the CSV table on stdout instead of the run record.
    #[arg(long)]
    pub csv: bool,
    #[arg(long, value_enum, default_value_t = ModeArg::Float)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = Convention::Last)]
    pub convention: Convention,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct GenSource {
    /// Quantum chained-optimal behavior with this many inputs.
    #[arg(long, group = "source")]
    pub quantum_chained: Option<usize>,
    #[arg(long, group = "source")]
    pub pr_box: bool,
    #[arg(long, group = "source")]
    pub uniform: bool,
    #[arg(long, group = "source")]
    pub ghz: bool,
}

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: GenSource,
    /// Inputs per party for `--uniform` and `--pr-box`.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Defaults to rational, or float for quantum behaviors.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t = Convention::Last)]
    pub convention: Convention,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CheckArgs {
    pub behavior: PathBuf,
    /// Override the mode's default tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Bound(a) => commands::bound(&a),
        Command::Measures(a) => commands::measures(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Check(a) => commands::check(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
