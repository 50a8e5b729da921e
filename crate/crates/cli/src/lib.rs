//! Command-line front end: every subcommand produces one [`ResultRecord`].

mod commands;
pub mod record;

use std::ffi::OsString;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use record::{fmt_real, Field, ResultRecord};

#[derive(Debug, Parser)]
#[command(
    name = "biruin",
    version,
    about = "Ruin probabilities for Brownian and Levy risk models"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub paths: u64,
    /// Time steps; 0 picks the estimator's default.
    #[arg(long, global = true, default_value_t = 0)]
    pub steps: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(
        long = "abs-tol",
        global = true,
        default_value_t = 1e-10,
        allow_negative_numbers = true
    )]
    pub abs_tol: f64,
    #[arg(
        long = "rel-tol",
        global = true,
        default_value_t = 1e-8,
        allow_negative_numbers = true
    )]
    pub rel_tol: f64,
    #[arg(long, global = true)]
    pub out: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One-dimensional Brownian ruin probability.
    Brm1(Brm1Args),
    /// Two-dimensional Brownian risk model.
    #[command(subcommand)]
    Brm2(Brm2Command),
    /// The constant C(a, rho) by Monte Carlo.
    Constant(ConstantArgs),
    /// Levy ruin probability with a two-line barrier by quadrature.
    Levy(LevyArgs),
    /// Monte Carlo estimators.
    #[command(subcommand)]
    Mc(McCommand),
    /// Cartesian grid of runs of another subcommand, written as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Brm1Args {
    #[arg(long, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub u: f64,
    /// Horizon, or `inf`.
    #[arg(long = "T", default_value = "1", allow_hyphen_values = true)]
    pub t: String,
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub u: f64,
}

#[derive(Debug, Subcommand)]
pub enum Brm2Command {
    /// Lower and upper bounds on psi(u, v).
    Bounds {
        #[command(flatten)]
        pair: PairArgs,
        /// Second capital; defaults to `a u`.
        #[arg(long, allow_negative_numbers = true)]
        v: Option<f64>,
    },
    /// Tail asymptotics of psi(u, a u).
    Asym {
        #[command(flatten)]
        pair: PairArgs,
        /// The constant C(a, rho), needed when a > rho.
        #[arg(long = "C", allow_negative_numbers = true)]
        c_hat: Option<f64>,
    },
    /// Minimum of the two marginal ruin probabilities.
    Crude {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Bound on ruin before time 1 - T/u^2.
    EarlyBound {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        window: f64,
    },
    /// Limit law of u^2 (1 - tau) given ruin.
    RuintimeCdf {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstantMethod {
    Staircase,
    Lattice,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    /// Truncation horizon for a single I(T); without it the ladder is extrapolated.
    #[arg(long = "T", allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long = "t-max", default_value_t = 16.0, allow_negative_numbers = true)]
    pub t_max: f64,
    #[arg(long, value_enum, default_value = "staircase")]
    pub method: ConstantMethod,
    /// Lattice spacing.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub spacing: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// brownian, gamma, stable, perturbed-gamma, or one of these prefixed with `neg-`.
    #[arg(long, default_value = "gamma")]
    pub model: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BarrierArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub c1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    #[arg(long = "T", default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
}

#[derive(Debug, Clone, Args)]
pub struct LevyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub barrier: BarrierArgs,
}

#[derive(Debug, Subcommand)]
pub enum McCommand {
    /// Simultaneous ruin psi(u, v) of the two-dimensional model.
    Psi2d {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, allow_negative_numbers = true)]
        v: Option<f64>,
        /// `auto`, `none`, or a drift `t1,t2` for the driving pair.
        #[arg(long = "is", default_value = "auto", allow_hyphen_values = true)]
        is: String,
        /// Ruin is checked on `[0, window]`.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        window: f64,
    },
    /// One-dimensional ruin with bridge correction.
    Psi1d(Brm1Args),
    /// Levy two-line ruin by path simulation.
    Levy(LevyArgs),
    /// Scaled ruin time u^2 (1 - tau) given ruin, against its limit law.
    Ruintime {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long = "is", default_value = "auto", allow_hyphen_values = true)]
        is: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// `name=v1,v2,...`; the first grid varies slowest.
    #[arg(long = "grid", required = true)]
    pub grid: Vec<String>,
    /// The subcommand and its fixed flags.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, required = true)]
    pub target: Vec<String>,
}

/// Failure of a run with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: msg.into(),
        }
    }
}

impl From<biruin::Error> for Failure {
    fn from(e: biruin::Error) -> Self {
        use biruin::Error as E;
        let code = match e {
            E::NonConvergence { .. } | E::DegenerateIs { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Exit code, bytes for standard output and text for standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub const USAGE_EXIT: i32 = 64;

/// Parses `argv` (including the program name) and runs one subcommand.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => {
                    let grammar = <Cli as clap::CommandFactory>::command().render_help().to_string();
                    Outcome {
                        code: USAGE_EXIT,
                        stdout: String::new(),
                        stderr: format!("{text}\n{grammar}"),
                    }
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Sweep(s) => commands::sweep(&cli.global, s),
        _ => execute(&cli).map(|r| render(&r, cli.global.format)),
    };
    match result {
        Ok(text) => {
            if let Some(path) = &cli.global.out {
                if let Err(e) = std::fs::write(path, &text) {
                    return Outcome {
                        code: 1,
                        stdout: text,
                        stderr: format!("cannot write {path}: {e}\n"),
                    };
                }
            }
            Outcome {
                code: 0,
                stdout: text,
                stderr: String::new(),
            }
        }
        Err(f) => Outcome {
            code: f.code,
            stdout: String::new(),
            stderr: format!("error: {}\n", f.message),
        },
    }
}

/// Runs a parsed non-sweep command.
pub fn execute(cli: &Cli) -> Result<ResultRecord, Failure> {
    let t0 = Instant::now();
    let mut r = commands::dispatch(&cli.command, &cli.global)?;
    r.elapsed_ms = t0.elapsed().as_millis() as u64;
    Ok(r)
}

pub fn render(r: &ResultRecord, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = r.to_json();
            s.push('\n');
            s
        }
        Format::Csv => record::write_csv(&r.csv_header(), &[r.csv_row()]),
    }
}
