use kernbayes::sim::{run_experiment, DgpSpec, ExperimentConfig, Method};
use serde_json::json;

use super::RunLog;
use crate::args::Common;
use crate::config::{parse_methods, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

pub const DEFAULT_REPLICATIONS: usize = 100;

pub fn run(methods: &[String], common: &Common) -> CliResult<()> {
    let cfg = RunConfig::from_common(common)?;
    let log = RunLog::start("simulate", &[], &cfg);
    let seed = cfg.seed(common)?;
    let design = cfg
        .design
        .as_deref()
        .ok_or_else(|| CliError::usage("required but missing").at("config field `design`"))?
        .parse()?;
    let error = cfg.error.as_deref().unwrap_or("gaussian_half").parse()?;
    let n = cfg.require("n", cfg.n)?;
    let methods = if !methods.is_empty() {
        parse_methods(methods).map_err(|e| e.at("--method"))?
    } else if let Some(ms) = &cfg.methods {
        parse_methods(ms)?
    } else {
        Method::ALL.to_vec()
    };
    let spec = DgpSpec { design, error, n, seed };
    spec.validate().map_err(|e| CliError::from(e).at("config field `n`"))?;
    let exp = ExperimentConfig {
        methods,
        replications: cfg.replications.unwrap_or(DEFAULT_REPLICATIONS),
        sampler: cfg.sampler(seed),
        prior: cfg.prior(common, design.d())?,
        search: cfg.search(),
        evidence: cfg.evidence.unwrap_or(false),
    };
    let out = OutDir::create(common)?;
    let result = run_experiment(&spec, &exp)?;
    out.write("results.csv", &result.to_tidy_csv(cfg.include_runtime.unwrap_or(false)))?;
    let summary = result.summary_csv();
    out.write("summary.csv", &summary)?;
    log.finish(&out, Some(seed), json!({ "dgp": spec, "experiment": exp }))?;
    print!("{summary}");
    Ok(())
}
