use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{read_run_config, ConfigError, Experiment, RunConfig};
use crate::experiments::{self, Outcome, RunError};

#[derive(Debug, Parser)]
#[command(name = "meshless", version, about = "Meshless PDE experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Laplacian approximation error of five engine setups on refined grids.
    ApproxConvergence(CommonArgs),
    /// Explicit heat equation on a square with a hole, against its steady state.
    Heat2d(CommonArgs),
    /// Implicit convection-diffusion solve in 3D.
    Convdiff3d(CommonArgs),
    /// Manufactured Poisson convergence and timing benchmark.
    PoissonBench(CommonArgs),
    /// Variable-density node generation.
    FillDemo(CommonArgs),
}

impl Command {
    fn split(&self) -> (Experiment, &CommonArgs) {
        match self {
            Command::ApproxConvergence(a) => (Experiment::ApproxConvergence, a),
            Command::Heat2d(a) => (Experiment::Heat2d, a),
            Command::Convdiff3d(a) => (Experiment::Convdiff3d, a),
            Command::PoissonBench(a) => (Experiment::PoissonBench, a),
            Command::FillDemo(a) => (Experiment::FillDemo, a),
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: results/<experiment>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed of all random choices; overrides the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spatial dimension; overrides the configuration.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub dim: Option<u8>,
    /// Only print errors.
    #[arg(long)]
    pub quiet: bool,
}

/// Seed used when neither the configuration nor the command line gives one.
pub const DEFAULT_SEED: u64 = 1;

/// Name of the manifest written next to the results.
pub const MANIFEST: &str = "manifest.toml";

fn config_for(experiment: Experiment, args: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let mut config = match &args.config {
        Some(path) => {
            let c = read_run_config(path)?;
            if c.experiment != experiment {
                return Err(ConfigError::Invalid {
                    key: "experiment".into(),
                    message: format!("configuration is for {}, not {experiment}", c.experiment),
                });
            }
            c
        }
        None => RunConfig::new(experiment, experiment.default_dim(), DEFAULT_SEED),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dim) = args.dim {
        config.dim = dim as usize;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

/// The manifest: the fully resolved configuration, loadable with `--config`,
/// preceded by comments naming the tool versions and the files written.
pub fn manifest(resolved: &RunConfig, outcome: &Outcome) -> String {
    let mut s = String::new();
    s.push_str(&format!("# meshless-cli {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# files: {}\n", outcome.files.join(", ")));
    s.push_str(&resolved.to_toml());
    s
}

fn execute(experiment: Experiment, args: &CommonArgs) -> Result<(PathBuf, Outcome), RunError> {
    let config = config_for(experiment, args)?;
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| Path::new("results").join(experiment.name()));
    let resolved = experiments::resolve(&config)?;
    let outcome = experiments::run(&resolved, &out)?;
    let path = out.join(MANIFEST);
    std::fs::write(&path, manifest(&resolved, &outcome)).map_err(|source| RunError::Io { path, source })?;
    Ok((out, outcome))
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (experiment, args) = cli.command.split();
    match execute(experiment, args) {
        Ok((out, outcome)) => {
            if !args.quiet {
                for line in &outcome.report {
                    println!("{line}");
                }
                println!("wrote {} files to {}", outcome.files.len() + 1, out.display());
            }
            0
        }
        Err(e) => {
            eprintln!("meshless {experiment}: {e}");
            e.exit_code()
        }
    }
}
