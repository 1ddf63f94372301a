use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "kernbayes", version, about = "Bayesian bandwidth estimation for kernel regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Key-value (TOML) configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed; required by every stochastic command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub estimator: Option<EstimatorArg>,
    #[arg(long, global = true, value_enum)]
    pub prior: Option<PriorArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    /// Local linear.
    Ll,
    /// Local constant (Nadaraya-Watson).
    Lc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Ig,
    Exp,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectMethod {
    Rot,
    Cv,
}

/// Bandwidth source for prediction and state-price densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandwidthMethod {
    Bayes,
    Rot,
    Cv,
    /// Bandwidths from the configuration file.
    Explicit,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the bandwidth posterior and write a report plus chain archive.
    Fit {
        /// CSV with header `y,x1,..,xd`.
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Rule-of-thumb or cross-validation bandwidths.
    Select {
        data: PathBuf,
        #[arg(long, value_enum)]
        method: SelectMethod,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo experiment; writes tidy results and per-method medians.
    Simulate {
        /// Methods to run, overriding the configuration (comma separated).
        #[arg(long, value_delimiter = ',')]
        method: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Forecasts and prediction intervals for a test sample.
    Predict {
        train: PathBuf,
        test: PathBuf,
        #[arg(long, value_enum, default_value = "bayes")]
        method: BandwidthMethod,
        #[command(flatten)]
        common: Common,
    },
    /// Log marginal likelihoods of both estimators and their Bayes factor.
    Evidence {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// State-price densities from an options panel.
    Spd {
        options: PathBuf,
        #[arg(long, value_enum, default_value = "bayes")]
        method: BandwidthMethod,
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild the fit report from a chain archive without resampling.
    Summarize {
        #[arg(long)]
        archive: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}
