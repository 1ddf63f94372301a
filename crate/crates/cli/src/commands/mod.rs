pub mod evidence;
pub mod fit;
pub mod predict;
pub mod select;
pub mod simulate;
pub mod spd;
pub mod summarize;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{to_json, OutDir};

/// `run.json`: what was run and with which settings. Wall time is only
/// recorded when `include_runtime` is set so reruns stay byte-identical.
#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    version: &'a str,
    inputs: Vec<String>,
    seed: Option<u64>,
    config: &'a RunConfig,
    resolved: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_secs: Option<f64>,
}

pub(crate) struct RunLog<'a> {
    command: &'a str,
    inputs: Vec<String>,
    config: &'a RunConfig,
    start: Instant,
}

impl<'a> RunLog<'a> {
    pub fn start(command: &'a str, inputs: &[&Path], config: &'a RunConfig) -> Self {
        Self {
            command,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            start: Instant::now(),
        }
    }

    pub fn finish(self, out: &OutDir, seed: Option<u64>, resolved: Value) -> CliResult<()> {
        let wall = self.config.include_runtime.unwrap_or(false).then(|| self.start.elapsed().as_secs_f64());
        let record = RunRecord {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            inputs: self.inputs,
            seed,
            config: self.config,
            resolved,
            wall_time_secs: wall,
        };
        out.write("run.json", &to_json(&record))?;
        Ok(())
    }
}
