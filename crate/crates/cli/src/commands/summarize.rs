use std::path::Path;

use kernbayes::bayes::{chain_from_csv, ChainMeta};

use super::fit::report_csv;
use crate::args::Common;
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

fn read(dir: &Path, name: &str) -> CliResult<String> {
    let p = dir.join(name);
    std::fs::read_to_string(&p).map_err(|e| CliError::usage(format!("cannot read archive file: {e}")).at(p.display().to_string()))
}

/// Rebuilds `report.csv` from `chain.csv` and `chain_meta.json`.
pub fn run(archive: &Path, common: &Common) -> CliResult<()> {
    let meta = ChainMeta::from_json(&read(archive, "chain_meta.json")?)
        .map_err(|e| CliError::from(e).at(archive.join("chain_meta.json").display().to_string()))?;
    let chain = chain_from_csv(&read(archive, "chain.csv")?, &meta)
        .map_err(|e| CliError::from(e).at(archive.join("chain.csv").display().to_string()))?;
    let report = report_csv(&chain)?;
    OutDir::create(common)?.write("report.csv", &report)?;
    print!("{report}");
    Ok(())
}
