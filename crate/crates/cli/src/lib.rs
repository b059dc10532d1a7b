//! `sensory` command-line front end: argument parsing, subcommands writing CSV,
//! text and SVG outputs, and the exit-code contract
//! (0 success, 1 input or validation error, 2 numerical degeneracy).

#![allow(clippy::needless_range_loop)]

pub mod commands;
pub mod format;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use sensory_core::association::AssociationError;
use sensory_core::correspondence::CaError;
use sensory_core::data::Method;
use sensory_core::hedonic::HedonicError;
use sensory_core::power::PowerError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn input(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{context}: {e}"))
    }
}

pub(crate) fn from_association(context: &str, e: AssociationError) -> CliError {
    match e {
        AssociationError::DegenerateTable { .. } | AssociationError::EmptySelection => {
            CliError::Numerical(format!("{context}: {e}"))
        }
        other => CliError::input(context, other),
    }
}

pub(crate) fn from_ca(context: &str, e: CaError) -> CliError {
    match e {
        CaError::DegenerateTable { .. } => CliError::Numerical(format!("{context}: {e}")),
        other => CliError::input(context, other),
    }
}

pub(crate) fn from_hedonic(context: &str, e: HedonicError) -> CliError {
    match e {
        HedonicError::ZeroWithinVariance => CliError::Numerical(format!("{context}: {e}")),
        other => CliError::input(context, other),
    }
}

pub(crate) fn from_power(context: &str, e: PowerError) -> CliError {
    match e {
        PowerError::Table(t) => from_association(context, t),
        other => CliError::input(context, other),
    }
}

#[derive(Debug, Parser)]
#[command(name = "sensory", version, about = "CATA / APT sensory panel analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Directory receiving the output files (created if missing)
    #[arg(long, short = 'o', default_value = ".")]
    pub output_dir: PathBuf,
    /// Field separator of CSV input and output
    #[arg(long, default_value_t = ';')]
    pub separator: char,
    /// Master seed; generated and recorded in run.txt when omitted
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Response file: Product;NumPanel;<attributes>[;Score]
    #[arg(long, short = 'i')]
    pub input: PathBuf,
    /// Name of the trailing hedonic column
    #[arg(long, default_value = "Score")]
    pub hedonic_column: String,
    /// Treat every column after NumPanel as an attribute
    #[arg(long)]
    pub no_hedonic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cata,
    Apt,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cata => Method::Cata,
            MethodArg::Apt => Method::Apt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SummaryArg {
    Mean,
    Median,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Shipped perception model (null, paper-shaped, paper-shaped-apt, strong)
    #[arg(long, conflicts_with = "model")]
    pub preset: Option<String>,
    /// Directory holding intensity.csv and params.toml
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Response channel to simulate
    #[arg(long, value_enum, default_value_t = MethodArg::Cata)]
    pub method: MethodArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a response file and write its contingency table
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Chi-square test, correspondence analysis and bootstrap ellipses
    Ca {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: Common,
        /// Bootstrap replicates per ellipse
        #[arg(long, default_value_t = sensory_core::correspondence::DEFAULT_REPLICATES)]
        replicates: usize,
        /// Ellipse confidence level
        #[arg(long, default_value_t = sensory_core::correspondence::DEFAULT_LEVEL)]
        level: f64,
        /// Resample each product row separately (row totals fixed)
        #[arg(long)]
        per_row: bool,
    },
    /// p-value of the independence test as a function of panel size
    Power {
        /// Response file to subsample (omit to simulate from a model)
        #[arg(long, short = 'i')]
        input: Option<PathBuf>,
        #[arg(long, default_value = "Score")]
        hedonic_column: String,
        #[arg(long)]
        no_hedonic: bool,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
        /// Sizes as a:b:n or a comma list (default: 12 points from 10 to the panel size)
        #[arg(long)]
        sizes: Option<String>,
        /// Draws per size
        #[arg(long, default_value_t = sensory_core::power::DEFAULT_DRAWS)]
        draws: usize,
        #[arg(long, value_enum, default_value_t = SummaryArg::Mean)]
        summary: SummaryArg,
        /// Significance line and crossing threshold
        #[arg(long, default_value_t = sensory_core::power::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Largest panel of the default grid when simulating from a model
        #[arg(long, default_value_t = 65)]
        panelists: usize,
    },
    /// One-way ANOVA, Tukey HSD and compact letters on hedonic scores
    Hedonic {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = sensory_core::hedonic::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Session plan, server key and printable questionnaires
    Questionnaire {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = MethodArg::Cata)]
        method: MethodArg,
        /// Comma-separated product labels, in identity-digit order
        #[arg(long)]
        products: String,
        /// Attribute file, one name per line (default: the 17 wine attributes)
        #[arg(long)]
        attributes: Option<PathBuf>,
        #[arg(long)]
        panelists: usize,
        /// Number of distinct attribute orders
        #[arg(long, default_value_t = sensory_core::protocol::DEFAULT_ORDERS)]
        orders: usize,
        /// 1-based position of the product digit in each code
        #[arg(long, default_value_t = sensory_core::protocol::DEFAULT_HIDDEN_DIGIT_POSITION)]
        hidden_digit_pos: usize,
        #[arg(long, default_value_t = sensory_core::protocol::DEFAULT_CODE_LENGTH)]
        code_length: usize,
        /// Williams-design serving orders instead of independent random ones
        #[arg(long)]
        balanced: bool,
        /// Write HTML sheets instead of plain text
        #[arg(long)]
        html: bool,
    },
    /// Synthetic panel from a perception model
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 65)]
        panelists: usize,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Ingest { common, .. }
            | Command::Ca { common, .. }
            | Command::Power { common, .. }
            | Command::Hedonic { common, .. }
            | Command::Questionnaire { common, .. }
            | Command::Simulate { common, .. } => common,
        }
    }
}

/// Runs one command; returns the paths written.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    let run = || commands::dispatch(command);
    match command.common().threads {
        Some(0) => Err(CliError::Input("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Parses `args` (program name first), runs, reports on stderr, returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
