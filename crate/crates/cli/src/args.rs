//! Flags, config-file merging and resolved settings.
//!
//! A config file is a JSON object whose keys are the long flag names of the
//! chosen subcommand (with `_` for `-`). Flags win over the file; the file
//! wins over built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use collide_charge::{Error, QubitSwapParams, Result, StateClass};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "collide-charge", version, about = "Collisional charging of an oscillator battery")]
pub struct Cli {
    /// JSON file with default values for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV output and the resolved config.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the qubit swap chain from the ground state and snapshot it.
    Regimes(RegimesArgs),
    /// Random specs and fuels for d-level fuel; ergotropy trajectories.
    Ensemble(EnsembleArgs),
    /// Fixed points of two random specs driven by one passive fuel.
    Stationary(StationaryArgs),
    /// Transient / positive-recurrent / null-recurrent verdict for a chain.
    Classify(ClassifyArgs),
    /// Sample a path of the chain and, optionally, return-time statistics.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimesArgs {
    /// Fuel populations; omit to run the passive, mixed and active fuels.
    #[arg(long, num_args = 2, value_names = ["S1", "S2"])]
    pub fuel: Option<Vec<f64>>,
    /// Snapshot steps, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    /// Initial truncation.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Master seed (required).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial pure battery level.
    #[arg(long)]
    pub initial_level: Option<usize>,
    /// Initial truncation.
    #[arg(long)]
    pub n: Option<usize>,
    /// Use this fuel class for every run: passive, active or mixed.
    #[arg(long)]
    pub fuel_class: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub seed_a: Option<u64>,
    #[arg(long)]
    pub seed_b: Option<u64>,
    /// Seed of the passive fuel draw; defaults to the first spec seed.
    #[arg(long)]
    pub fuel_seed: Option<u64>,
    /// Initial truncation.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Where the chain comes from: qubit fuel with collision weights, or a
/// matrix file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainArgs {
    #[arg(long, num_args = 2, value_names = ["S1", "S2"], conflicts_with = "matrix")]
    pub qubit: Option<Vec<f64>>,
    /// Collision weights: `const:<value>` or `harmonic` (1/2 + 1/(2n)).
    #[arg(long)]
    pub alpha: Option<String>,
    /// Transition matrix in the `N d` / `k m value` text format.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Truncation for qubit chains.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Level whose returns are estimated.
    #[arg(long)]
    pub origin: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Horizon ladder, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<u64>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also estimate return statistics at `start` from this many paths.
    #[arg(long)]
    pub trials: Option<u64>,
}

/// Field-wise `flags.or(file)`.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ty { $($field:ident),* }) => {
        impl Merge for $ty {
            fn merge(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

merge_fields!(RegimesArgs { fuel, steps, n });
merge_fields!(EnsembleArgs { d, runs, steps, seed, initial_level, n, fuel_class });
merge_fields!(StationaryArgs { d, seed_a, seed_b, fuel_seed, n, tol });
merge_fields!(ChainArgs { qubit, alpha, matrix, n });

impl Merge for ClassifyArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            chain: self.chain.merge(file.chain),
            origin: self.origin.or(file.origin),
            trials: self.trials.or(file.trials),
            horizons: self.horizons.or(file.horizons),
            seed: self.seed.or(file.seed),
        }
    }
}

impl Merge for SampleArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            chain: self.chain.merge(file.chain),
            start: self.start.or(file.start),
            horizon: self.horizon.or(file.horizon),
            seed: self.seed.or(file.seed),
            trials: self.trials.or(file.trials),
        }
    }
}

/// Reads `path` as a JSON object of flag values.
pub fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("{}: {e}", path.display()),
    })
}

pub fn fuel_pair(v: &[f64], flag: &str) -> Result<(f64, f64)> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::InvalidParameter(format!("--{flag} takes two populations"))),
    }
}

/// Collision weights `alpha_2..=alpha_{last_shell}` from a spec string.
pub fn parse_alpha(spec: &str, last_shell: usize) -> Result<QubitSwapParams> {
    if spec == "harmonic" {
        return QubitSwapParams::from_fn(last_shell, |n| 0.5 + 0.5 / n as f64);
    }
    if let Some(v) = spec.strip_prefix("const:") {
        let value: f64 = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad alpha value '{v}'")))?;
        return QubitSwapParams::constant(value, last_shell);
    }
    Err(Error::InvalidParameter(format!(
        "alpha must be 'const:<value>' or 'harmonic', got '{spec}'"
    )))
}

pub fn parse_class(s: &str) -> Result<StateClass> {
    s.parse()
}
