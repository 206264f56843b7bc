//! `kso`: command-line front end for the logic, valuation, representation,
//! simulation and random-bit tools in `kso-core`.
//!
//! Data goes to standard output (or `--out`), diagnostics to standard error.
//! Exit codes: 0 success, 1 a test or verification failed, 2 bad usage or
//! input, 3 internal error.

mod commands;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "kso",
    version,
    about = "Greechie logics, two-valued states, orthogonal representations, circuit simulation and random bits"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Seed for every stochastic step; echoed in the output.
    #[arg(long, global = true, env = "KSO_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write data here instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel steps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format for tabular data.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Logic files: validation and diagram export.
    #[command(subcommand)]
    Logic(LogicCmd),
    /// Two-valued states: enumeration, relational queries, certificates.
    #[command(subcommand)]
    States(StatesCmd),
    /// Orthogonal representations: verification and search.
    #[command(subcommand)]
    Repr(ReprCmd),
    /// State-vector circuits: Deutsch, order finding, factoring.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Simulated random bits and their statistical tests.
    #[command(subcommand)]
    Rng(RngCmd),
}

#[derive(Subcommand, Debug)]
pub enum LogicCmd {
    /// Parse a logic file and report every violated invariant.
    Validate { logic: PathBuf },
    /// Print the Greechie diagram as a DOT graph.
    ExportDot { logic: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum StatesCmd {
    /// List every two-valued state (JSON objects or CSV rows).
    Enumerate { logic: PathBuf },
    /// Given `atom=value`, what do the surviving states say about another atom?
    Query {
        logic: PathBuf,
        /// Hypothesis, e.g. `a=true`.
        #[arg(long = "if", value_name = "ATOM=BOOL")]
        hypothesis: String,
        /// Atom whose value is asked for.
        #[arg(long = "then", value_name = "ATOM")]
        conclusion: String,
    },
    /// Check that preparing an atom rules out every classical state.
    Certify {
        logic: PathBuf,
        #[arg(long)]
        prepared: String,
        #[arg(long)]
        target: String,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Tolerances {
    /// Largest accepted |<u,v>| for co-contextual atoms.
    #[arg(long, default_value_t = kso_core::orthorep::DEFAULT_TOL_ORTH)]
    pub tol_orth: f64,
    /// Largest accepted | |u| - 1 |.
    #[arg(long, default_value_t = kso_core::orthorep::DEFAULT_TOL_NORM)]
    pub tol_norm: f64,
    /// Faithfulness threshold for atoms sharing no context.
    #[arg(long, default_value_t = kso_core::orthorep::DEFAULT_SEP_MIN)]
    pub sep_min: f64,
}

#[derive(Subcommand, Debug)]
pub enum ReprCmd {
    /// Check a vector file against a logic.
    Verify {
        logic: PathBuf,
        #[arg(long, value_name = "FILE")]
        vectors: PathBuf,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Search for a faithful representation by random-restart least squares.
    Solve {
        logic: PathBuf,
        /// Fix an atom's vector, e.g. `b=sqrt2/2,1/2,1/2`. Repeatable.
        #[arg(long = "pin", value_name = "ATOM=V1,V2,..")]
        pins: Vec<String>,
        #[arg(long, default_value_t = kso_core::orthorep::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = kso_core::orthorep::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[command(flatten)]
        tol: Tolerances,
        /// Also write the vectors as a vector file.
        #[arg(long, value_name = "FILE")]
        vectors_out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SimCmd {
    /// Decide constant versus not constant with one oracle call.
    Deutsch {
        /// One of f0 (const 0), f1 (identity), f2 (not), f3 (const 1); all four if omitted.
        #[arg(long)]
        function: Option<String>,
    },
    /// Sample the order-finding circuit and post-process each shot.
    Order {
        #[arg(long)]
        base: u64,
        #[arg(long)]
        modulus: u64,
        #[arg(long, default_value_t = 1)]
        shots: usize,
        /// Index register width (default: smallest m with 2^m >= N^2).
        #[arg(long)]
        register_bits: Option<usize>,
    },
    /// Factor an odd composite with simulated order finding.
    Shor {
        #[arg(long)]
        n: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum RngCmd {
    /// Generate bits from click/no-click of a target projector.
    Generate {
        /// Number of bits.
        #[arg(long)]
        bits: usize,
        /// Prepared unit vector (default 1,0,0).
        #[arg(long)]
        prep: Option<String>,
        /// Measured unit vector (default sqrt2/2,1/2,1/2).
        #[arg(long)]
        target: Option<String>,
        /// Write '0'/'1' characters instead of the packed format.
        #[arg(long)]
        ascii: bool,
    },
    /// Run Borel normality (and optionally monobit and runs) on a bit file.
    Test {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Also run the monobit and runs tests.
        #[arg(long)]
        all: bool,
    },
}

/// What a command produced and whether it counts as a pass.
pub struct Outcome {
    pub data: Vec<u8>,
    pub passed: bool,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files.
    Usage(String),
    /// Unexpected failure.
    Internal(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    let result = std::panic::catch_unwind(|| commands::run(&cli));
    let outcome = match result {
        Ok(Ok(outcome)) => outcome,
        Ok(Err(CliError::Usage(msg))) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Ok(Err(CliError::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            return ExitCode::from(3);
        }
        Err(_) => return ExitCode::from(3),
    };
    match &cli.global.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &outcome.data) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => {
            if let Err(e) = std::io::stdout().lock().write_all(&outcome.data) {
                eprintln!("internal error: cannot write output: {e}");
                return ExitCode::from(3);
            }
        }
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
