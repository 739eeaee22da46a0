mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use triguard_core::chase::DEFAULT_MAX_ATOMS;

#[derive(Parser, Debug)]
#[command(name = "triguard", version, about = "Static analysis for existential rules")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Class {
    Wa,
    Guarded,
    Sticky,
    Shy,
    Tg,
    All,
}

#[derive(clap::Args, Debug, Clone, Copy)]
pub struct PairLimit {
    /// Cap on the number of extension pairs.
    #[arg(long, env = "TGCHECK_MAX_PAIRS", default_value_t = 100_000)]
    pub max_pairs: usize,
}

#[derive(clap::Args, Debug, Clone, Copy)]
pub struct ChaseLimits {
    /// Number of chase levels to compute.
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    /// Stop before a level once the instance holds this many atoms.
    #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
    pub max_atoms: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide class membership.
    Classify {
        rules: PathBuf,
        #[arg(long, value_enum, default_value_t = Class::All)]
        class: Class,
        #[command(flatten)]
        limit: PairLimit,
    },
    /// Unfold rule heads into bodies and list the resulting pairs.
    Extend {
        rules: PathBuf,
        /// Stop after this many unfolding rounds.
        #[arg(long)]
        levels: Option<usize>,
        #[command(flatten)]
        limit: PairLimit,
    },
    /// Search for a recursive triangular component.
    Rtc {
        rules: PathBuf,
        /// Report every field of the witness and re-validate it.
        #[arg(long)]
        explain: bool,
        #[command(flatten)]
        limit: PairLimit,
    },
    /// Run the chase and print the labelled instance.
    Chase {
        rules: PathBuf,
        facts: PathBuf,
        #[command(flatten)]
        limits: ChaseLimits,
        /// Write the instance here instead of embedding it in the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer a boolean conjunctive query up to a chase depth.
    Ask {
        rules: PathBuf,
        facts: PathBuf,
        query: PathBuf,
        #[command(flatten)]
        limits: ChaseLimits,
    },
    /// Print the existential dependency graph in DOT.
    Graph { rules: PathBuf },
    /// Print the null sets of every argument occurrence.
    Nullsets { rules: PathBuf },
    /// Look for late nulls with no interchangeable early partner.
    Probe {
        rules: PathBuf,
        facts: PathBuf,
        /// Connected shape, e.g. "t(X,Y), u(Y,Z)".
        #[arg(long)]
        shape: String,
        /// n_small,n_big,k
        #[arg(long, value_parser = parse_bounds, default_value = "2,4,2")]
        bounds: (usize, usize, usize),
        /// Also compute the theoretical bounds m, N and N'.
        #[arg(long)]
        theory: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
        max_atoms: usize,
        #[command(flatten)]
        limit: PairLimit,
    },
    /// Generate a random rule set.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_rules: usize,
        #[arg(long, default_value_t = 2)]
        max_body_atoms: usize,
        #[arg(long, default_value_t = 3)]
        max_arity: usize,
        #[arg(long, default_value_t = 3)]
        predicates: usize,
        #[arg(long, default_value_t = 4)]
        variables: usize,
        #[arg(long, default_value_t = 0.3)]
        existential_probability: f64,
    },
}

fn parse_bounds(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated numbers".into());
    }
    let n = |x: &str| x.parse::<usize>().map_err(|e| format!("{x}: {e}"));
    Ok((n(parts[0])?, n(parts[1])?, n(parts[2])?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR)
        }
    }
}
