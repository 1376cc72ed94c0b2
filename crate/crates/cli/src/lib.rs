//! Batch front end: `conelab <ode|recursion|green|solve|verify> [--config FILE] [flags]`.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
use config::SolverChoice;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Capacity(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Capacity(m) => write!(f, "capacity error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Capacity(_) => EXIT_CAPACITY,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<conelab_core::Error> for CliError {
    fn from(e: conelab_core::Error) -> Self {
        use conelab_core::Error as E;
        match e {
            E::Domain(_) | E::GammaNotAboveOne(_) | E::Pole => CliError::Config(e.to_string()),
            E::Capacity(_) => CliError::Capacity(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            E::Solver(_) | E::Internal(_) | E::Format(_) => CliError::Internal(e.to_string()),
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "conelab", version, about = "Numerical lab for -Δu = u^(-γ) in the critical planar sector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// One-dimensional profiles: translation and rotation solutions
    Ode,
    /// Growth recursion for all three regimes
    Recursion,
    /// Green function checks
    Green,
    /// Run the solvers and extract a_k
    Solve,
    /// Full pipeline with a single verdict document
    Verify,
}

#[derive(Subcommand, Debug)]
enum Command {
    Ode(Overrides),
    Recursion(Overrides),
    Green(Overrides),
    Solve(Overrides),
    Verify(Overrides),
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (must exist)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_theta: Option<usize>,
    #[arg(long)]
    annuli: Option<usize>,
    /// Ladder depth K
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    /// Number of recursion terms
    #[arg(long)]
    k: Option<usize>,
    /// Recursion constants, comma separated
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
}

impl Command {
    fn split(self) -> (Kind, Overrides) {
        match self {
            Command::Ode(o) => (Kind::Ode, o),
            Command::Recursion(o) => (Kind::Recursion, o),
            Command::Green(o) => (Kind::Green, o),
            Command::Solve(o) => (Kind::Solve, o),
            Command::Verify(o) => (Kind::Verify, o),
        }
    }
}

impl Overrides {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(self.gamma, cfg.gamma);
        set!(self.seed, cfg.seed);
        set!(self.out, cfg.output_dir);
        set!(self.n_r, cfg.grid.n_r);
        set!(self.n_theta, cfg.grid.n_theta);
        set!(self.annuli, cfg.grid.annuli);
        set!(self.solver, cfg.solver.kind);
        set!(self.k, cfg.recursion.k);
        set!(self.c, cfg.recursion.c);
        if self.depth.is_some() {
            cfg.depth = self.depth;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn name(kind: Kind) -> &'static str {
    match kind {
        Kind::Ode => "ode",
        Kind::Recursion => "recursion",
        Kind::Green => "green",
        Kind::Solve => "solve",
        Kind::Verify => "verify",
    }
}

fn dispatch(kind: Kind, cfg: &RunConfig) -> Result<bool, CliError> {
    let sink = output::Sink::new(cfg)?;
    let run = || match kind {
        Kind::Ode => commands::cmd_ode(cfg, &sink),
        Kind::Recursion => commands::cmd_recursion(cfg, &sink),
        Kind::Green => commands::cmd_green(cfg, &sink),
        Kind::Solve => commands::cmd_solve(cfg, &sink),
        Kind::Verify => commands::cmd_verify(cfg, &sink),
    };
    let res = run();
    if let Err(e) = &res {
        output::write_failure(&sink.dir, name(kind), e);
    }
    res
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let (kind, overrides) = cli.command.split();
    let result = overrides.resolve().and_then(|cfg| dispatch(kind, &cfg));
    match result {
        Ok(true) => {
            eprintln!("{}: all checks passed", name(kind));
            EXIT_PASS
        }
        Ok(false) => {
            eprintln!("{}: check failure (see report)", name(kind));
            EXIT_CHECK_FAILED
        }
        Err(e) => {
            eprintln!("{}: {e}", name(kind));
            e.exit_code()
        }
    }
}
