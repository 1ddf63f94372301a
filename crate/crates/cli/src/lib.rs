//! Command-line front end: argument and config parsing, CSV ingestion and
//! atomic result files for each subcommand.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;

use args::{Cli, Command};
use error::CliResult;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit { data, common } => commands::fit::run(&data, &common),
        Command::Select { data, method, common } => commands::select::run(&data, method, &common),
        Command::Simulate { method, common } => commands::simulate::run(&method, &common),
        Command::Predict { train, test, method, common } => commands::predict::run(&train, &test, method, &common),
        Command::Evidence { data, common } => commands::evidence::run(&data, &common),
        Command::Spd { options, method, common } => commands::spd::run(&options, method, &common),
        Command::Summarize { archive, common } => commands::summarize::run(&archive, &common),
    }
}
