//! Command-line driver: argument parsing, configuration loading and the
//! subcommands that write reports, tables and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;
use output::{to_json, OutputSet, RunManifest, MANIFEST_SUFFIX};

const EXAMPLES: &str = "\
Examples:
  shs --config configs/constant_family.json check
  shs --config configs/constant_family.json blowup --param-grid 1.5:20:40 --out blowup.csv
  shs --config configs/constant_family.json --out-dir run spectrum --count 5
  shs --config configs/block_diagonal.json --out-dir run first-eig
  shs --config configs/constant_family.json --out-dir run eigenfunction --record run/spectrum.json --paths 1000
  shs --out-dir run growth --in run/spectrum.json
  shs --config configs/constant_family.json --out-dir run --seed 7 pipeline --count 5

Exit codes: 0 success, 1 assumption failure, 2 config error, 3 numeric or stage failure.";

#[derive(Parser, Debug)]
#[command(
    name = "shs",
    version,
    about = "Eigenvalues and eigenfunctions of linear stochastic Hamiltonian systems with regime switching",
    after_help = EXAMPLES
)]
pub struct Cli {
    /// Coefficient configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for outputs; relative output paths resolve against it.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Root seed for Monte Carlo streams.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the standing assumptions and print a pass/fail table.
    #[command(after_help = "Example:\n  shs --config configs/constant_family.json check --checks monotonicity,delta,h4,h5")]
    Check(CheckArgs),
    /// Sweep a parameter grid and tabulate blow-up times.
    #[command(after_help = "Example:\n  shs --config configs/constant_family.json blowup --family primal --param-grid 1.5:20:40")]
    Blowup(BlowupArgs),
    /// Eigenvalue sequence of a one-dimensional system.
    #[command(after_help = "Example:\n  shs --config configs/constant_family.json spectrum --count 5 --tol 1e-8")]
    Spectrum(SpectrumArgs),
    /// First eigenvalue and kernel of a multi-dimensional system.
    #[command(after_help = "Example:\n  shs --config configs/block_diagonal.json first-eig")]
    FirstEig(FirstEigArgs),
    /// Monte Carlo eigenfunction paths for a certified eigenvalue record.
    #[command(after_help = "Example:\n  shs --config configs/constant_family.json eigenfunction --record spectrum.json --index 1 --paths 1000")]
    Eigenfunction(EigenfunctionArgs),
    /// Power-law growth fit of an eigenvalue sequence.
    #[command(after_help = "Example:\n  shs growth --in spectrum.json")]
    Growth(GrowthArgs),
    /// Checks, spectrum, eigenfunctions and growth fit in one run.
    #[command(after_help = "Example:\n  shs --config configs/constant_family.json --out-dir run --seed 7 pipeline --count 5 --paths 1000")]
    Pipeline(PipelineArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Blowup(_) => "blowup",
            Command::Spectrum(_) => "spectrum",
            Command::FirstEig(_) => "first-eig",
            Command::Eigenfunction(_) => "eigenfunction",
            Command::Growth(_) => "growth",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Monotonicity,
    Delta,
    H4,
    H5,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Checks whose failure makes the exit code nonzero.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "monotonicity,delta,h4")]
    pub checks: Vec<CheckKind>,
    /// Perturbation weight for the monotonicity check of `H + rho Hbar`.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Primal,
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pattern {
    /// `H22 - rho Hbar22`; the parameter is `rho`.
    Shifted,
    /// Coupling blocks scaled by `varrho`; the parameter is `varrho`.
    Scaled,
}

#[derive(Args, Debug)]
pub struct BlowupArgs {
    #[arg(long, value_enum, default_value = "primal")]
    pub family: Family,
    /// `start:end:points`, evenly spaced and inclusive.
    #[arg(long)]
    pub param_grid: String,
    /// Perturbation pattern; shifted for n = 1, scaled otherwise.
    #[arg(long, value_enum)]
    pub pattern: Option<Pattern>,
    #[arg(long, default_value = "blowup.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Largest number of chain links searched per eigenvalue.
    #[arg(long, default_value_t = 64)]
    pub max_links: usize,
    #[arg(long, default_value = "spectrum.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FirstEigArgs {
    /// `lo:hi` bracket in `rho`; found by doubling from 1 when unset.
    #[arg(long)]
    pub bracket: Option<String>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Gluing time of the primal and dual pieces (default T/2).
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub kernel_threshold: f64,
    #[arg(long, default_value = "first_eig.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SimulationArgs {
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    /// Time step (default T/4096).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of paths written to the CSV; the summary covers all paths.
    #[arg(long, default_value_t = 10)]
    pub csv_paths: usize,
}

#[derive(Args, Debug)]
pub struct EigenfunctionArgs {
    /// Record file written by `spectrum` or `first-eig`.
    #[arg(long)]
    pub record: PathBuf,
    /// Eigenvalue index within the record file (default: first record).
    #[arg(long)]
    pub index: Option<usize>,
    /// Comma-separated start vector (default: first kernel vector).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    #[command(flatten)]
    pub sim: SimulationArgs,
    #[arg(long, default_value = "eigenfunction.csv")]
    pub out: PathBuf,
    /// Residual summary JSON (default: the CSV path with a .json extension).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GrowthArgs {
    /// Record file with consecutive indices.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Number of eigenvalues; 0 runs the checks only.
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub sim: SimulationArgs,
}

/// Parses `args` (without the program name), runs the command and returns the
/// exit code. Errors are reported on stderr.
pub fn run<I, S>(args: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("shs".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 3;
        }
    };
    match pool.install(|| execute(&cli, &args)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, args: &[String]) -> Result<u8, CliError> {
    let started = Instant::now();
    let mut out = OutputSet::new(&cli.out_dir)?;
    let loaded = match (&cli.command, &cli.config) {
        (Command::Growth(_), _) => None,
        (_, Some(path)) => Some(config::load(path)?),
        (_, None) => return Err(CliError::config("--config", "this subcommand needs a configuration file")),
    };
    let spec = loaded.as_ref().map(|l| &l.spec);
    let code = match &cli.command {
        Command::Check(a) => commands::check(spec.unwrap(), a, &mut out)?,
        Command::Blowup(a) => commands::blowup(spec.unwrap(), a, &mut out)?,
        Command::Spectrum(a) => commands::spectrum(spec.unwrap(), a, &mut out)?,
        Command::FirstEig(a) => commands::first_eig(spec.unwrap(), a, &mut out)?,
        Command::Eigenfunction(a) => commands::eigenfunction(spec.unwrap(), a, cli.seed, &mut out)?,
        Command::Growth(a) => commands::growth(a, &mut out)?,
        Command::Pipeline(a) => commands::pipeline(loaded.as_ref().unwrap(), a, cli.seed, &mut out)?,
    };
    if !out.files.is_empty() {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: cli.command.name().to_string(),
            args: args.to_vec(),
            config_path: cli.config.as_ref().map(|p| p.display().to_string()),
            config_sha256: loaded.as_ref().map(|l| output::sha256_hex(&l.bytes)),
            seed: cli.seed,
            outputs: out.files.clone(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        };
        let path = out.resolve(&PathBuf::from(format!("{}.{MANIFEST_SUFFIX}", cli.command.name())));
        std::fs::write(&path, to_json(&manifest)).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(code)
}
